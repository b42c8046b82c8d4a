"""Stochastic channel generation for the high-mobility refracting-surface link.

Per transmission frame: a Rician base-to-surface channel whose LoS component
rotates at the Doppler rate across blocks, a quasi-static LoS surface-to-user
channel, their cascaded (Hadamard) product, and a Jakes-correlated Rayleigh
direct channel sequence.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, toeplitz
from scipy.special import j0

from .signal_math import DimensionError, fold_phase, steering_1d, steering_2d

SPEED_OF_LIGHT = 3e8


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x) -> float:
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class LinkBudget:
    """Distance-based power gain: 10^(eps0_db/10) * d^(-exponent)."""

    distance: float
    path_loss_exponent: float
    eps0_db: float = -30.0

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError(f"distance must be positive, got {self.distance}")


def path_gain(lb: LinkBudget) -> float:
    return db_to_linear(lb.eps0_db) * lb.distance ** (-lb.path_loss_exponent)


def doppler_frequency(v: float, theta: float, vartheta: float, lam: float) -> float:
    """Doppler frequency v*cos(theta)*cos(vartheta)/lambda; may be negative."""
    if lam <= 0:
        raise ValueError(f"wavelength must be positive, got {lam}")
    return v * np.cos(theta) * np.cos(vartheta) / lam


def _array_phases(theta: float, vartheta: float, spacing: float) -> tuple[float, float]:
    # Normalized inter-element phases of a UPA for elevation/azimuth (theta, vartheta):
    # 2*(d/lambda)*cos(theta)*cos(vartheta) along x, sin(vartheta) along y.
    return (
        2.0 * spacing * np.cos(theta) * np.cos(vartheta),
        2.0 * spacing * np.cos(theta) * np.sin(vartheta),
    )


@dataclass(frozen=True)
class BsIrsParams:
    """Frame-constant parameters of the Rician base-to-surface channel."""

    rho: complex
    rician_k: float
    f_d: float
    theta: float
    vartheta: float
    m_x: int
    m_y: int
    t_b: float
    spacing: float = 0.5

    def __post_init__(self):
        if self.rician_k < 0:
            raise ValueError("rician_k must be nonnegative")

    @property
    def phi(self) -> float:
        return _array_phases(self.theta, self.vartheta, self.spacing)[0]

    @property
    def varphi(self) -> float:
        return _array_phases(self.theta, self.vartheta, self.spacing)[1]

    def los_gain(self, n: int) -> complex:
        """Complex LoS gain at block n (1-based): Doppler-rotated, |.| constant."""
        k = self.rician_k
        return (
            np.sqrt(k / (1.0 + k)) * self.rho
            * np.exp(2j * np.pi * self.f_d * (n - 1) * self.t_b)
        )

    def steering(self) -> np.ndarray:
        return np.kron(steering_1d(self.phi, self.m_x), steering_1d(self.varphi, self.m_y))

    @property
    def nlos_variance(self) -> float:
        return abs(self.rho) ** 2 / (1.0 + self.rician_k)


@dataclass(frozen=True)
class IrsUserParams:
    """Quasi-static LoS surface-to-user channel parameters."""

    alpha: complex
    theta: float
    vartheta: float
    m_x: int
    m_y: int
    spacing: float = 0.5

    @property
    def phi(self) -> float:
        return _array_phases(self.theta, self.vartheta, self.spacing)[0]

    @property
    def varphi(self) -> float:
        return _array_phases(self.theta, self.vartheta, self.spacing)[1]


def bs_irs_los(params: BsIrsParams, n: int) -> np.ndarray:
    """LoS component of the base-to-surface channel at block n."""
    return params.los_gain(n) * params.steering()


def sample_bs_irs(params: BsIrsParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw the full base-to-surface channel at block n (LoS + i.i.d. NLoS)."""
    if n < 1:
        raise ValueError("block index is 1-based")
    m = params.m_x * params.m_y
    std = np.sqrt(params.nlos_variance / 2.0)
    nlos = std * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return bs_irs_los(params, n) + nlos


def irs_user(params: IrsUserParams) -> np.ndarray:
    """Surface-to-user channel g, constant across all blocks of a frame."""
    return params.alpha * np.kron(
        steering_1d(params.phi, params.m_x), steering_1d(params.varphi, params.m_y)
    )


def cascade(g: np.ndarray, a: np.ndarray, a_los_part: np.ndarray):
    """Split the cascaded channel g (.) a into its LoS/NLoS parts.

    Returns (c_los, c_nlos, beta) with c_los = beta * u(psi_x, psi_y); beta is
    read off the first entry since every steering vector starts at 1.
    """
    g, a, a_los_part = map(np.asarray, (g, a, a_los_part))
    if not (g.shape == a.shape == a_los_part.shape):
        raise DimensionError(
            f"shape mismatch: {g.shape}, {a.shape}, {a_los_part.shape}"
        )
    c_los = g * a_los_part
    c_nlos = g * (a - a_los_part)
    return c_los, c_nlos, c_los[0]


@dataclass
class BlockChannel:
    """Per-block channel state for the end-to-end link."""

    n: int
    c_los: np.ndarray
    c_nlos: np.ndarray
    h_d: complex
    beta: complex

    @property
    def c(self) -> np.ndarray:
        return self.c_los + self.c_nlos


def end_to_end(nu: np.ndarray, block: BlockChannel) -> complex:
    """Scalar end-to-end channel nu^T c + h_d."""
    nu = np.asarray(nu)
    if nu.shape != block.c_los.shape:
        raise DimensionError(f"refraction length {nu.shape} != {block.c_los.shape}")
    return complex(nu @ block.c + block.h_d)


def jakes_covariance(f_max: float, t_b: float, n_blocks: int) -> np.ndarray:
    """Toeplitz block-lag covariance J0(2*pi*f_max*|i-j|*T_b) (unit variance)."""
    lags = np.arange(n_blocks)
    return toeplitz(j0(2.0 * np.pi * abs(f_max) * lags * t_b))


def _jakes_factor(f_max: float, t_b: float, n_blocks: int) -> np.ndarray:
    cov = jakes_covariance(f_max, t_b, n_blocks)
    for jitter in (0.0, 1e-12, 1e-10, 1e-8):
        try:
            return cholesky(cov + jitter * np.eye(n_blocks), lower=True)
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("Jakes covariance not positive definite")


def sample_correlated_rayleigh(
    variance: float,
    f_max: float,
    t_b: float,
    n_blocks: int,
    rng: np.random.Generator,
    count: int = 1,
) -> np.ndarray:
    """(n_blocks, count) zero-mean complex Gaussians, Jakes-correlated in time.

    Columns are independent processes; each has stationary power `variance`.
    """
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    if variance == 0.0:
        return np.zeros((n_blocks, count), dtype=complex)
    factor = _jakes_factor(f_max, t_b, n_blocks)
    z = (rng.standard_normal((n_blocks, count)) + 1j * rng.standard_normal((n_blocks, count)))
    return np.sqrt(variance / 2.0) * (factor @ z)


def sample_direct_sequence(
    variance: float, f_max: float, t_b: float, n_blocks: int, rng: np.random.Generator
) -> np.ndarray:
    """Direct-channel sequence h_d^(1..N) with the Jakes autocorrelation."""
    return sample_correlated_rayleigh(variance, f_max, t_b, n_blocks, rng)[:, 0]


@dataclass
class FadingProcess:
    """One realization of a Jakes-correlated Rayleigh process."""

    variance: float
    f_max: float
    t_b: float
    n_blocks: int
    samples: np.ndarray


@dataclass(frozen=True)
class VehicleLinkParams:
    """Scenario-level constants for the on-vehicle deployment."""

    m_x: int
    m_y: int
    rician_k: float
    speed: float
    carrier_hz: float
    t_b: float
    n_blocks: int
    bs_irs_distance: float = 100.0
    bs_user_distance: float = 100.0
    irs_user_distance: float = 2.0
    eps0_db: float = -30.0
    exp_bs_user: float = 3.0
    exp_bs_irs: float = 2.2
    exp_irs_user: float = 2.2
    spacing: float = 0.5

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def f_max(self) -> float:
        return self.speed * self.carrier_hz / SPEED_OF_LIGHT


@dataclass
class FrameChannels:
    """All channel realizations of one transmission frame.

    Arrays are indexed by block (axis 0, 0-based); `psi_x`/`psi_y` are the
    true cascaded effective phases of block 1, used by the perfect-knowledge
    upper bound and for NMSE accounting.
    """

    c_los: np.ndarray  # (N, M)
    c_nlos: np.ndarray  # (N, M)
    h_d: np.ndarray  # (N,)
    psi_x: float
    psi_y: float
    m_x: int
    m_y: int
    beta: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.beta is None:
            self.beta = self.c_los[:, 0].copy()

    @property
    def n_blocks(self) -> int:
        return self.c_los.shape[0]

    @property
    def m(self) -> int:
        return self.c_los.shape[1]

    def c(self, n: int) -> np.ndarray:
        """Cascaded channel of block n (1-based)."""
        return self.c_los[n - 1] + self.c_nlos[n - 1]

    def block(self, n: int) -> BlockChannel:
        return BlockChannel(
            n=n,
            c_los=self.c_los[n - 1],
            c_nlos=self.c_nlos[n - 1],
            h_d=complex(self.h_d[n - 1]),
            beta=complex(self.beta[n - 1]),
        )


def sample_frame(p: VehicleLinkParams, rng: np.random.Generator) -> FrameChannels:
    """Draw one frame of the on-vehicle scenario.

    Angles are uniform over their nominal ranges; the LoS gains' phases are
    uniform as well (the physical model fixes only their magnitudes). NLoS
    entries and the direct channel are Jakes-correlated across blocks at the
    maximum Doppler frequency.
    """
    m = p.m_x * p.m_y
    lam = p.wavelength

    theta_bi = rng.uniform(0.0, np.pi / 2)
    vartheta_bi = rng.uniform(0.0, 2 * np.pi)
    theta_iu = rng.uniform(-np.pi / 2, 0.0)
    vartheta_iu = rng.uniform(0.0, 2 * np.pi)

    rho_gain = path_gain(LinkBudget(p.bs_irs_distance, p.exp_bs_irs, p.eps0_db))
    iu_gain = path_gain(LinkBudget(p.irs_user_distance, p.exp_irs_user, p.eps0_db))
    d_gain = path_gain(LinkBudget(p.bs_user_distance, p.exp_bs_user, p.eps0_db))

    rho = np.sqrt(rho_gain) * np.exp(1j * rng.uniform(0.0, 2 * np.pi))
    alpha_iu = np.sqrt(iu_gain) * np.exp(1j * rng.uniform(0.0, 2 * np.pi))

    f_d = doppler_frequency(p.speed, theta_bi, vartheta_bi, lam)
    bi = BsIrsParams(
        rho=rho, rician_k=p.rician_k, f_d=f_d, theta=theta_bi, vartheta=vartheta_bi,
        m_x=p.m_x, m_y=p.m_y, t_b=p.t_b, spacing=p.spacing,
    )
    iu = IrsUserParams(
        alpha=alpha_iu, theta=theta_iu, vartheta=vartheta_iu,
        m_x=p.m_x, m_y=p.m_y, spacing=p.spacing,
    )
    g = irs_user(iu)

    nlos = sample_correlated_rayleigh(
        bi.nlos_variance, p.f_max, p.t_b, p.n_blocks, rng, count=m
    )
    gains = np.array([bi.los_gain(n) for n in range(1, p.n_blocks + 1)])
    a_los = gains[:, None] * bi.steering()[None, :]

    c_los = g[None, :] * a_los
    c_nlos = g[None, :] * nlos

    h_d = sample_direct_sequence(d_gain, p.f_max, p.t_b, p.n_blocks, rng)

    psi_x = fold_phase(iu.phi + bi.phi)
    psi_y = fold_phase(iu.varphi + bi.varphi)
    return FrameChannels(
        c_los=c_los, c_nlos=c_nlos, h_d=h_d,
        psi_x=psi_x, psi_y=psi_y, m_x=p.m_x, m_y=p.m_y,
    )
