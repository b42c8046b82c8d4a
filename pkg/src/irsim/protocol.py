"""Frame orchestration of the two-stage transmission protocol.

Stage I: training with a tau1-symbol refraction pattern, phase estimation,
surface alignment to the estimated LoS direction, then data. Stage II (blocks
2..N): a two-pilot common-phase probe, LS estimation of the refracted/direct
channel pair, and a common phase shift that coherently combines them.
"""

from dataclasses import dataclass, field

import numpy as np

from . import estimation
from .channel import FrameChannels, db_to_linear
from .estimation import StageOneEstimates, StageTwoEstimates
from .signal_math import dft_matrix, steering_2d


@dataclass(frozen=True)
class FrameConfig:
    """Frame/pilot structure and power bookkeeping for one transmission frame."""

    n_blocks: int = 40
    q_symbols: int = 100
    tau1: int = 30
    tau_d: int = 1
    tau2: int = 2
    gamma_gap_db: float = 9.0
    sigma2: float = 0.0
    eta: float = 1.0
    a_x: int = 20
    a_y: int = 20
    training: str = "random"  # random | dft
    l_x: int | None = None

    def __post_init__(self):
        if self.n_blocks < 2:
            raise ValueError("n_blocks must be >= 2")
        if self.q_symbols <= self.tau1 + self.tau_d:
            raise ValueError(
                f"q_symbols ({self.q_symbols}) must exceed tau1 + tau_d "
                f"({self.tau1 + self.tau_d}); Stage I would have no data symbols"
            )
        if self.q_symbols <= self.tau2:
            raise ValueError("q_symbols must exceed tau2")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.training not in ("random", "dft"):
            raise ValueError(f"unknown training design {self.training!r}")

    @property
    def gamma_gap(self) -> float:
        return db_to_linear(self.gamma_gap_db)


@dataclass
class FrameResult:
    """Per-block SNRs, stage rates, and estimation diagnostics of one frame."""

    snr_per_block: np.ndarray
    rate_stage1: float
    rate_stage2: float
    rate_overall: float
    stage1_estimates: StageOneEstimates
    stage2_estimates: list[StageTwoEstimates] = field(default_factory=list)
    w_stage1: float = 0.0
    w_stage2: np.ndarray = field(default=None)


def random_refraction_matrix(
    tau1: int, m: int, eta: float, rng: np.random.Generator
) -> np.ndarray:
    """tau1 x M training matrix with i.i.d. uniform phases, amplitude eta."""
    if tau1 < 4:
        raise ValueError("tau1 must be >= 4 for Stage-I identifiability")
    return eta * np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(tau1, m)))


def default_l_x(tau1: int, m_x: int, m_y: int) -> int:
    """Divisor of tau1 whose column split best matches the m_x/m_y aspect."""
    target = np.log(m_x / m_y)
    best, best_err = 1, np.inf
    for cand in range(1, tau1 + 1):
        if tau1 % cand:
            continue
        err = abs(np.log(cand / (tau1 // cand)) - target)
        if err < best_err or (err == best_err and cand > best):
            best, best_err = cand, err
    return best


def _semi_equal_columns(count: int, m: int) -> np.ndarray:
    # count column indices spread over 0..m-1; repeats when count > m
    return (np.arange(count) * m // count) % m


def dft_refraction_matrix(
    tau1: int,
    m_x: int,
    m_y: int,
    l_x: int,
    eta: float = 1.0,
    literal_formula: bool = False,
) -> np.ndarray:
    """DFT-based training: each row a Kronecker pair of DFT columns.

    The published index schedule is kept behind `literal_formula` for
    comparison; it can address out-of-range columns, which are wrapped. The
    default schedule enumerates l_x x-columns and tau1/l_x y-columns chosen
    with semi-equal separation.
    """
    if l_x < 1 or tau1 % l_x:
        raise ValueError(f"l_x ({l_x}) must divide tau1 ({tau1})")
    d_x, d_y = dft_matrix(m_x), dft_matrix(m_y)
    l_y = tau1 // l_x
    rows = np.empty((tau1, m_x * m_y), dtype=complex)
    if literal_formula:
        for i in range(1, tau1 + 1):
            cx = ((i // l_x) * m_x // l_x) % m_x
            cy = (m_y * l_x * ((i % l_x) - 1) // tau1) % m_y
            rows[i - 1] = np.kron(d_x[:, cx], d_y[:, cy])
        return eta * rows
    x_cols = _semi_equal_columns(l_x, m_x)
    y_cols = _semi_equal_columns(l_y, m_y)
    for i in range(tau1):
        rows[i] = np.kron(d_x[:, x_cols[i // l_y]], d_y[:, y_cols[i % l_y]])
    return eta * rows


def make_training_matrix(cfg: FrameConfig, m_x: int, m_y: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.training == "random":
        return random_refraction_matrix(cfg.tau1, m_x * m_y, cfg.eta, rng)
    l_x = cfg.l_x if cfg.l_x is not None else default_l_x(cfg.tau1, m_x, m_y)
    return dft_refraction_matrix(cfg.tau1, m_x, m_y, l_x, eta=cfg.eta)


def initial_refraction(psi_hat: tuple[float, float], m_x: int, m_y: int, eta: float = 1.0) -> np.ndarray:
    """Refraction aligned to the estimated LoS direction: eta * u*(psi_hat)."""
    return eta * np.conj(steering_2d(psi_hat[0], psi_hat[1], m_x, m_y))


def stage2_training_matrix(tau2: int) -> np.ndarray:
    """First two columns of the tau2 x tau2 DFT matrix; column 2 carries mu_i."""
    if tau2 < 2:
        raise ValueError("tau2 must be >= 2 for the rank-2 Stage-II fit")
    return dft_matrix(tau2)[:, :2]


def data_phase_stage2(delta: float) -> complex:
    """Common phase shift e^{j delta} aligning the refracted and direct links."""
    return complex(np.exp(1j * delta))


def rate_stage1(w_i: float, cfg: FrameConfig, overhead: int | None = None) -> float:
    """Stage-I rate with training overhead charged against the Q symbols."""
    if w_i < 0:
        raise ValueError("effective channel power gain must be nonnegative")
    if overhead is None:
        overhead = cfg.tau1 + cfg.tau_d
    if overhead >= cfg.q_symbols:
        raise ValueError("training overhead leaves no data symbols in Stage I")
    prefactor = (cfg.q_symbols - overhead) / cfg.q_symbols
    return prefactor * np.log2(1.0 + w_i / (cfg.gamma_gap * cfg.sigma2))


def rate_stage2(w_list: np.ndarray, cfg: FrameConfig, tau2: int | None = None) -> float:
    """Average Stage-II rate over the N-1 data blocks."""
    w_list = np.asarray(w_list, dtype=float)
    if w_list.size == 0:
        raise ValueError("Stage II requires at least one block")
    if tau2 is None:
        tau2 = cfg.tau2
    prefactor = (cfg.q_symbols - tau2) / (w_list.size * cfg.q_symbols)
    return prefactor * float(np.sum(np.log2(1.0 + w_list / (cfg.gamma_gap * cfg.sigma2))))


def overall_rate(r1: float, r2: float, n: int) -> float:
    """Frame rate: Stage I weighted 1/N, Stage II (N-1)/N."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return r1 / n + (n - 1) * r2 / n


def _noise(rng: np.random.Generator, sigma2: float, size: int) -> np.ndarray:
    if sigma2 == 0.0:
        return np.zeros(size, dtype=complex)
    std = np.sqrt(sigma2 / 2.0)
    return std * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def run_frame(
    cfg: FrameConfig,
    channels: FrameChannels,
    rng: np.random.Generator,
    *,
    psi_true: tuple[float, float] | None = None,
    mu_policy: str = "instant",
    stage1_data: str = "aligned",
    inject_noise: bool = True,
) -> FrameResult:
    """Execute one frame of the two-stage protocol on given channel realizations.

    `psi_true` bypasses the Stage-I search (perfect phase knowledge bound).
    `mu_policy`: "instant" applies each block's estimated phase gap in the
    same block, "delayed" applies the previous block's (one-block feedback
    delay), "none" disables common-phase alignment (single Stage-II pilot).
    `stage1_data`: "aligned" points the surface at the Stage-I estimate for
    the Stage-I data phase; "last_training" keeps the final training vector
    (the feedback-delay variant, which also drops the extra tau_d pilots).
    """
    if mu_policy not in ("instant", "delayed", "none"):
        raise ValueError(f"unknown mu_policy {mu_policy!r}")
    if stage1_data not in ("aligned", "last_training"):
        raise ValueError(f"unknown stage1_data {stage1_data!r}")
    n_blocks, m = channels.n_blocks, channels.m
    if n_blocks != cfg.n_blocks:
        raise ValueError(f"channels have {n_blocks} blocks, config says {cfg.n_blocks}")
    noise_var = cfg.sigma2 if inject_noise else 0.0

    v = make_training_matrix(cfg, channels.m_x, channels.m_y, rng)
    c1 = channels.c(1)
    y = v @ c1 + channels.h_d[0] + _noise(rng, noise_var, cfg.tau1)
    prob = estimation.make_problem(y, v, channels.m_x, channels.m_y)
    if psi_true is not None:
        est1 = estimation.stage_one_at(psi_true[0], psi_true[1], prob)
    else:
        init = estimation.grid_search(prob, cfg.a_x, cfg.a_y)
        est1 = estimation.refine(init, prob)

    nu_bar = initial_refraction((est1.psi_x_hat, est1.psi_y_hat), channels.m_x, channels.m_y, cfg.eta)

    if stage1_data == "aligned":
        nu_1d = nu_bar
        h_1d_true = complex(nu_1d @ c1 + channels.h_d[0])
        pilots = h_1d_true + _noise(rng, noise_var, cfg.tau_d)
        estimation.estimate_effective_stage1(pilots)  # receiver-side decode estimate
        overhead1 = cfg.tau1 + cfg.tau_d
    else:
        nu_1d = v[-1]
        h_1d_true = complex(nu_1d @ c1 + channels.h_d[0])
        overhead1 = cfg.tau1
    w_i = abs(h_1d_true) ** 2

    use_cpa = mu_policy != "none"
    tau2 = cfg.tau2 if use_cpa else 1
    theta = stage2_training_matrix(cfg.tau2) if use_cpa else None

    w_ii = np.empty(n_blocks - 1)
    stage2_estimates: list[StageTwoEstimates] = []
    deltas: list[float] = []
    for n in range(2, n_blocks + 1):
        c_n = channels.c(n)
        h_r = complex(nu_bar @ c_n)
        h_d = complex(channels.h_d[n - 1])
        if use_cpa:
            y_n = theta @ np.array([h_d, h_r]) + _noise(rng, noise_var, cfg.tau2)
            est2 = estimation.ls_stage2(theta, y_n)
            stage2_estimates.append(est2)
            deltas.append(est2.delta)
            if mu_policy == "instant":
                mu = data_phase_stage2(est2.delta)
            else:  # delayed: previous block's feedback, unity at block 2
                mu = 1.0 + 0.0j if n == 2 else data_phase_stage2(deltas[-2])
        else:
            # single pilot estimates the effective channel directly
            _noise(rng, noise_var, 1)
            mu = 1.0 + 0.0j
        w_ii[n - 2] = abs(mu * h_r + h_d) ** 2

    r1 = rate_stage1(w_i, cfg, overhead=overhead1)
    r2 = rate_stage2(w_ii, cfg, tau2=tau2)
    snr = np.concatenate(([w_i], w_ii)) / cfg.sigma2 if cfg.sigma2 else np.full(n_blocks, np.inf)
    return FrameResult(
        snr_per_block=snr,
        rate_stage1=r1,
        rate_stage2=r2,
        rate_overall=overall_rate(r1, r2, n_blocks),
        stage1_estimates=est1,
        stage2_estimates=stage2_estimates,
        w_stage1=w_i,
        w_stage2=w_ii,
    )
