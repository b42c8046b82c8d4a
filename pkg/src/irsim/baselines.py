"""Reference schemes: ideal refraction, full cascaded estimation (CCCE),
no-surface, no common-phase alignment, feedback delay, and fixed roadside
reflecting-surface deployments."""

from dataclasses import dataclass

import numpy as np

from . import protocol
from .channel import (
    FrameChannels,
    LinkBudget,
    SPEED_OF_LIGHT,
    path_gain,
    sample_correlated_rayleigh,
    sample_direct_sequence,
)
from .protocol import FrameConfig, FrameResult, _noise
from .signal_math import dft_matrix, fold_phase


def optimal_refraction(c: np.ndarray, h_d: complex, eta: float = 1.0) -> np.ndarray:
    """Per-element phases -angle(c_m) + angle(h_d): full coherent alignment.

    Zero cascaded entries get phase angle(h_d) (any phase is optimal there).
    """
    c = np.asarray(c)
    return eta * np.exp(1j * (-np.angle(c) + np.angle(h_d)))


def run_no_irs_frame(cfg: FrameConfig, channels: FrameChannels) -> FrameResult:
    """Direct link only: one pilot per block, rate prefactor (Q-1)/Q."""
    w = np.abs(channels.h_d) ** 2
    prefactor = (cfg.q_symbols - 1) / cfg.q_symbols
    with np.errstate(divide="ignore"):
        rates = prefactor * np.log2(1.0 + w / (cfg.gamma_gap * cfg.sigma2))
        snr = w / cfg.sigma2 if cfg.sigma2 else np.full_like(w, np.inf)
    r1 = float(rates[0])
    r2 = float(rates[1:].mean())
    return FrameResult(
        snr_per_block=snr,
        rate_stage1=r1,
        rate_stage2=r2,
        rate_overall=float(rates.mean()),
        stage1_estimates=None,
        w_stage1=float(w[0]),
        w_stage2=w[1:],
    )


def run_no_cpa_frame(
    cfg: FrameConfig,
    channels: FrameChannels,
    rng: np.random.Generator,
    *,
    psi_true=None,
    inject_noise: bool = True,
) -> FrameResult:
    """Proposed Stage I, but Stage II keeps mu = 1 with a single pilot."""
    return protocol.run_frame(
        cfg, channels, rng, psi_true=psi_true, mu_policy="none", inject_noise=inject_noise
    )


def run_feedback_delay_frame(
    cfg: FrameConfig,
    channels: FrameChannels,
    rng: np.random.Generator,
    *,
    psi_true=None,
    inject_noise: bool = True,
) -> FrameResult:
    """One-block feedback delay: stale phase alignment, no extra Stage-I pilots."""
    return protocol.run_frame(
        cfg, channels, rng,
        psi_true=psi_true, mu_policy="delayed", stage1_data="last_training",
        inject_noise=inject_noise,
    )


def run_ccce_frame(
    cfg: FrameConfig,
    channels: FrameChannels,
    rng: np.random.Generator,
    *,
    inject_noise: bool = True,
) -> FrameResult:
    """Full cascaded estimation: M+1 pilots per block, then ideal refraction.

    The per-block training stacks the rows of an (M+1)-point DFT matrix; the
    all-ones first column rides on the direct channel, columns 1..M are the
    per-pilot refraction patterns. If M+1 >= Q there are no data symbols left
    and every block's rate is zero (overload).
    """
    m = channels.m
    n_pilots = m + 1
    n_blocks = channels.n_blocks
    noise_var = cfg.sigma2 if inject_noise else 0.0
    overloaded = n_pilots >= cfg.q_symbols

    d = dft_matrix(n_pilots)
    design = d.copy()
    design[:, 1:] *= cfg.eta  # refraction amplitude applies to surface columns only
    # DFT training inverts analytically: pinv(design) rescales D^H columns
    w = np.empty(n_blocks)
    for n in range(1, n_blocks + 1):
        h_vec = np.concatenate(([channels.h_d[n - 1]], channels.c(n)))
        y = design @ h_vec + _noise(rng, noise_var, n_pilots)
        h_hat = d.conj().T @ y / n_pilots
        h_hat[1:] /= cfg.eta
        nu = optimal_refraction(h_hat[1:], complex(h_hat[0]), eta=cfg.eta)
        w[n - 1] = abs(nu @ channels.c(n) + channels.h_d[n - 1]) ** 2

    if overloaded:
        rates = np.zeros(n_blocks)
    else:
        prefactor = (cfg.q_symbols - n_pilots) / cfg.q_symbols
        with np.errstate(divide="ignore"):
            rates = prefactor * np.log2(1.0 + w / (cfg.gamma_gap * cfg.sigma2))
    snr = w / cfg.sigma2 if cfg.sigma2 else np.full_like(w, np.inf)
    return FrameResult(
        snr_per_block=snr,
        rate_stage1=float(rates[0]),
        rate_stage2=float(rates[1:].mean()),
        rate_overall=float(rates.mean()),
        stage1_estimates=None,
        w_stage1=float(w[0]),
        w_stage2=w[1:],
    )


# ---------------------------------------------------------------------------
# Deployment comparison: on-vehicle vs fixed roadside surfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoadsideScenario:
    """Geometry and fading constants of the roadside deployment comparison."""

    m_x: int
    m_y: int
    rician_k: float  # on-vehicle base-to-surface Rician factor
    rician_k_rs: float  # roadside (static) Rician factor
    velocity: float  # m/s along +x
    carrier_hz: float = 5.9e9
    t_b: float = 2e-4
    total_blocks: int = 400
    bs_position: tuple = (-50.0, 0.0, 85.0)
    user_start: tuple = (0.0, 0.0, 0.0)
    roadside_irs_start: tuple = (0.0, 1.5, 0.0)
    inter_irs_distance: float = 2.0
    n_roadside_irs: int = 2
    vehicle_irs_offset: tuple = (0.0, 0.0, 1.5)
    frame_blocks_single: int = 40
    frame_blocks_multi: int = 10
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
        return self.velocity * self.carrier_hz / SPEED_OF_LIGHT

    def irs_positions(self, mode: str) -> np.ndarray:
        base = np.asarray(self.roadside_irs_start, dtype=float)
        if mode == "single":
            return base[None, :]
        if mode == "multi":
            if self.n_roadside_irs < 2:
                raise ValueError("multi mode needs at least two surfaces")
            offsets = np.arange(self.n_roadside_irs) * self.inter_irs_distance
            pos = np.tile(base, (self.n_roadside_irs, 1))
            pos[:, 0] += offsets
            return pos
        raise ValueError(f"unknown mode {mode!r}")

    def user_position(self, t: float) -> np.ndarray:
        return np.asarray(self.user_start, dtype=float) + np.array([self.velocity * t, 0.0, 0.0])


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("degenerate geometry: coincident nodes")
    return vec / norm


def _upa_phases(direction: np.ndarray, axis_a: np.ndarray, axis_b: np.ndarray, spacing: float):
    """Normalized inter-element phases from the direction cosines on the array axes."""
    return (
        2.0 * spacing * float(direction @ axis_a),
        2.0 * spacing * float(direction @ axis_b),
    )


def _kron_steering(phi_a: float, phi_b: float, m_a: int, m_b: int) -> np.ndarray:
    ka = np.exp(1j * np.pi * phi_a * np.arange(m_a))
    kb = np.exp(1j * np.pi * phi_b * np.arange(m_b))
    return np.kron(ka, kb)


_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


def vehicle_frame_channels(
    scn: RoadsideScenario, start_block: int, rng: np.random.Generator, n_blocks: int
) -> FrameChannels:
    """One on-vehicle frame at the deployment-comparison geometry.

    The surface rides with the vehicle (x-y plane); angles are taken from the
    frame-start geometry and held for the frame, with the LoS Doppler
    rotation derived from the motion component along the arrival direction.
    """
    bs = np.asarray(scn.bs_position, dtype=float)
    t0 = start_block * scn.t_b
    user = scn.user_position(t0)
    irs = user + np.asarray(scn.vehicle_irs_offset)

    d_bi = np.linalg.norm(bs - irs)
    d_bu = np.linalg.norm(bs - user)
    d_iu = np.linalg.norm(irs - user)
    arr_dir = _unit(bs - irs)
    phi_bi, varphi_bi = _upa_phases(arr_dir, _X, _Y, scn.spacing)
    dep_dir = _unit(user - irs)
    phi_iu, varphi_iu = _upa_phases(dep_dir, _X, _Y, scn.spacing)

    lam = scn.wavelength
    f_d = scn.velocity * float(arr_dir @ _X) / lam
    k = scn.rician_k
    m = scn.m_x * scn.m_y

    rho = np.sqrt(path_gain(LinkBudget(d_bi, scn.exp_bs_irs, scn.eps0_db))) * np.exp(
        1j * rng.uniform(0, 2 * np.pi)
    )
    alpha_iu = np.sqrt(path_gain(LinkBudget(d_iu, scn.exp_irs_user, scn.eps0_db))) * np.exp(
        1j * rng.uniform(0, 2 * np.pi)
    )
    g = alpha_iu * _kron_steering(phi_iu, varphi_iu, scn.m_x, scn.m_y)
    s_bi = _kron_steering(phi_bi, varphi_bi, scn.m_x, scn.m_y)

    blocks = np.arange(n_blocks)
    los_gain = np.sqrt(k / (1 + k)) * rho * np.exp(2j * np.pi * f_d * blocks * scn.t_b)
    nlos = sample_correlated_rayleigh(
        abs(rho) ** 2 / (1 + k), scn.f_max, scn.t_b, n_blocks, rng, count=m
    )
    c_los = los_gain[:, None] * (g * s_bi)[None, :]
    c_nlos = g[None, :] * nlos

    h_var = path_gain(LinkBudget(d_bu, scn.exp_bs_user, scn.eps0_db))
    h_d = sample_direct_sequence(h_var, scn.f_max, scn.t_b, n_blocks, rng)
    return FrameChannels(
        c_los=c_los, c_nlos=c_nlos, h_d=h_d,
        psi_x=fold_phase(phi_iu + phi_bi), psi_y=fold_phase(varphi_iu + varphi_bi),
        m_x=scn.m_x, m_y=scn.m_y,
    )


def roadside_frame_channels(
    scn: RoadsideScenario, mode: str, start_block: int, rng: np.random.Generator, n_blocks: int
) -> FrameChannels:
    """One roadside frame: static Rician base link, per-block LoS user link.

    The nearest surface (ties to the lower index) serves each block; its
    base-to-surface channel is drawn once per frame and held. The
    surface-to-user channel is recomputed from geometry each block, which
    carries the Doppler-induced phase/angle drift.
    """
    bs = np.asarray(scn.bs_position, dtype=float)
    positions = scn.irs_positions(mode)
    lam = scn.wavelength
    k = scn.rician_k_rs
    m = scn.m_x * scn.m_y

    # frame-static base-to-surface channel per surface (x-z plane, road-facing)
    a_los_static = np.empty((len(positions), m), dtype=complex)
    a_nlos_static = np.empty((len(positions), m), dtype=complex)
    s_bi_phases = []
    for idx, irs in enumerate(positions):
        arr_dir = _unit(bs - irs)
        phi_bi, varphi_bi = _upa_phases(arr_dir, _X, _Z, scn.spacing)
        s_bi_phases.append((phi_bi, varphi_bi))
        rho = np.sqrt(path_gain(LinkBudget(np.linalg.norm(bs - irs), scn.exp_bs_irs, scn.eps0_db)))
        rho = rho * np.exp(1j * rng.uniform(0, 2 * np.pi))
        s_bi = _kron_steering(phi_bi, varphi_bi, scn.m_x, scn.m_y)
        std = np.sqrt(abs(rho) ** 2 / (1 + k) / 2.0)
        a_los_static[idx] = np.sqrt(k / (1 + k)) * rho * s_bi
        a_nlos_static[idx] = std * (rng.standard_normal(m) + 1j * rng.standard_normal(m))

    c_los = np.empty((n_blocks, m), dtype=complex)
    c_nlos = np.empty((n_blocks, m), dtype=complex)
    psi_first = None
    for b in range(n_blocks):
        t = (start_block + b) * scn.t_b
        user = scn.user_position(t)
        dists = np.linalg.norm(positions - user[None, :], axis=1)
        sel = int(np.argmin(dists))  # argmin takes the lower index on ties
        irs = positions[sel]
        d_iu = dists[sel]
        if d_iu == 0.0:
            raise ValueError("degenerate geometry: user coincides with a surface")
        dep_dir = _unit(user - irs)
        phi_iu, varphi_iu = _upa_phases(dep_dir, _X, _Z, scn.spacing)
        alpha = np.sqrt(path_gain(LinkBudget(d_iu, scn.exp_irs_user, scn.eps0_db)))
        alpha = alpha * np.exp(-2j * np.pi * d_iu / lam)
        g = alpha * _kron_steering(phi_iu, varphi_iu, scn.m_x, scn.m_y)
        phi_bi, varphi_bi = s_bi_phases[sel]
        c_los[b] = g * a_los_static[sel]
        c_nlos[b] = g * a_nlos_static[sel]
        if psi_first is None:
            psi_first = (fold_phase(phi_iu + phi_bi), fold_phase(varphi_iu + varphi_bi))

    t0 = start_block * scn.t_b
    d_bu = np.linalg.norm(bs - scn.user_position(t0))
    h_var = path_gain(LinkBudget(d_bu, scn.exp_bs_user, scn.eps0_db))
    h_d = sample_direct_sequence(h_var, scn.f_max, scn.t_b, n_blocks, rng)
    return FrameChannels(
        c_los=c_los, c_nlos=c_nlos, h_d=h_d,
        psi_x=psi_first[0], psi_y=psi_first[1],
        m_x=scn.m_x, m_y=scn.m_y,
    )


def nearest_irs_indices(scn: RoadsideScenario, mode: str) -> np.ndarray:
    """Selected surface index per block along the whole trajectory."""
    positions = scn.irs_positions(mode)
    out = np.empty(scn.total_blocks, dtype=int)
    for b in range(scn.total_blocks):
        user = scn.user_position(b * scn.t_b)
        out[b] = int(np.argmin(np.linalg.norm(positions - user[None, :], axis=1)))
    return out


def run_roadside_frame(
    scn: RoadsideScenario,
    mode: str,
    cfg: FrameConfig,
    rng: np.random.Generator,
    *,
    start_block: int = 0,
) -> FrameResult:
    """One protocol frame under a roadside deployment (single | multi)."""
    channels = roadside_frame_channels(scn, mode, start_block, rng, cfg.n_blocks)
    return protocol.run_frame(cfg, channels, rng)


def run_roadside_trial(
    scn: RoadsideScenario, mode: str, cfg: FrameConfig, rng: np.random.Generator
) -> list[FrameResult]:
    """Consecutive frames covering the whole traveling period T_tol."""
    n_blocks = scn.frame_blocks_single if mode == "single" else scn.frame_blocks_multi
    cfg = FrameConfig(**{**cfg.__dict__, "n_blocks": n_blocks})
    results = []
    for start in range(0, scn.total_blocks, n_blocks):
        results.append(run_roadside_frame(scn, mode, cfg, rng, start_block=start))
    return results


def run_vehicle_trial(
    scn: RoadsideScenario, cfg: FrameConfig, rng: np.random.Generator
) -> list[FrameResult]:
    """On-vehicle frames over the same traveling period, same geometry."""
    n_blocks = scn.frame_blocks_single
    cfg = FrameConfig(**{**cfg.__dict__, "n_blocks": n_blocks})
    results = []
    for start in range(0, scn.total_blocks, n_blocks):
        channels = vehicle_frame_channels(scn, start, rng, n_blocks)
        results.append(protocol.run_frame(cfg, channels, rng))
    return results
