"""Parameter estimation for the two-stage protocol.

Stage I concentrates the likelihood down to the two effective phases
(psi_x, psi_y), locates them with a coarse 2D grid search, and refines with
gradient ascent under a backtracking line search. Stage II is a rank-2 least
squares fit of the (direct, refracted) channel pair.
"""

from dataclasses import dataclass, field

import numpy as np

from .signal_math import (
    CenteringProjector,
    centering_projector,
    fold_phase,
    steering_1d,
    steering_2d,
)

_XI_TINY = 1e-300


class DegenerateDirectionError(ValueError):
    """The centered training response is (numerically) zero at this point."""


class IllPosedError(ValueError):
    """The training matrix does not have full column rank."""


@dataclass
class EstimationProblem:
    """Stage-I observation model: y = beta*V*u(psi) + h_d*1 + eps.

    `bv` caches B @ V; all objective/gradient evaluations run through it.
    Immutable after construction and safe to share across evaluations.
    """

    y: np.ndarray
    v_matrix: np.ndarray
    projector: CenteringProjector
    m_x: int
    m_y: int
    bv: np.ndarray = field(default=None, repr=False)
    by: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        tau1, m = self.v_matrix.shape
        if m != self.m_x * self.m_y:
            raise ValueError(f"V has {m} columns, expected {self.m_x * self.m_y}")
        if self.y.shape != (tau1,):
            raise ValueError(f"y has shape {self.y.shape}, expected ({tau1},)")
        if self.bv is None:
            self.bv = self.projector.apply(self.v_matrix)
        if self.by is None:
            self.by = self.projector.apply(self.y)

    @property
    def tau1(self) -> int:
        return self.y.shape[0]


def make_problem(y: np.ndarray, v_matrix: np.ndarray, m_x: int, m_y: int) -> EstimationProblem:
    y = np.asarray(y, dtype=complex)
    v_matrix = np.asarray(v_matrix, dtype=complex)
    return EstimationProblem(
        y=y, v_matrix=v_matrix, projector=centering_projector(v_matrix.shape[0]),
        m_x=m_x, m_y=m_y,
    )


def _xi(psi_x: float, psi_y: float, prob: EstimationProblem) -> np.ndarray:
    return prob.bv @ steering_2d(psi_x, psi_y, prob.m_x, prob.m_y)


def ml_objective(psi_x: float, psi_y: float, prob: EstimationProblem) -> float:
    """Concentrated likelihood |xi^H y|^2 / ||xi||^2 with xi = B V u(psi).

    Returns 0 at degenerate points where ||xi|| vanishes (measure zero for
    random training designs); such points simply lose the arg-max.
    """
    xi = _xi(psi_x, psi_y, prob)
    denom = float(np.real(xi.conj() @ xi))
    if denom < _XI_TINY:
        return 0.0
    return float(abs(xi.conj() @ prob.y) ** 2 / denom)


def ml_objective_grid(psi_x: np.ndarray, psi_y: np.ndarray, prob: EstimationProblem) -> np.ndarray:
    """Vectorized objective over all (psi_x[j], psi_y[k]) pairs: (len_x, len_y)."""
    sx = np.exp(1j * np.pi * np.outer(np.arange(prob.m_x), psi_x))  # (m_x, Ax)
    sy = np.exp(1j * np.pi * np.outer(np.arange(prob.m_y), psi_y))  # (m_y, Ay)
    # u columns for all pairs via the Kronecker structure
    u = np.einsum("xa,yb->xyab", sx, sy).reshape(prob.m_x * prob.m_y, -1)
    xi = prob.bv @ u  # (tau1, Ax*Ay)
    denom = np.einsum("ij,ij->j", xi.conj(), xi).real
    numer = np.abs(prob.y.conj() @ xi) ** 2
    obj = np.where(denom < _XI_TINY, 0.0, numer / np.where(denom < _XI_TINY, 1.0, denom))
    return obj.reshape(len(psi_x), len(psi_y))


def grid_points(a: int) -> np.ndarray:
    """Uniform quantization -1 + 2j/A, j = 1..A."""
    return -1.0 + 2.0 * np.arange(1, a + 1) / a


def grid_search(prob: EstimationProblem, a_x: int = 20, a_y: int = 20) -> tuple[float, float]:
    """Exhaustive 2D search over the (A_x, A_y) grid; lexicographic tie-break."""
    if a_x < 1 or a_y < 1:
        raise ValueError("grid sizes must be >= 1")
    px, py = grid_points(a_x), grid_points(a_y)
    obj = ml_objective_grid(px, py, prob)
    flat = np.argmax(obj)  # first occurrence == smallest (j, k) lexicographically
    jx, ky = np.unravel_index(flat, obj.shape)
    return float(px[jx]), float(py[ky])


@dataclass
class GradientTerms:
    """Intermediate quantities of the analytic gradient."""

    xi: np.ndarray
    zeta_x: np.ndarray
    zeta_y: np.ndarray


def derivative_multipliers(m: int) -> np.ndarray:
    """Diagonal of the per-element derivative operator: (0, j*pi, ..., j*(m-1)*pi).

    The zeroth entry is 0 (derivative of a constant first steering entry).
    """
    return 1j * np.pi * np.arange(m)


def gradient_terms(psi_x: float, psi_y: float, prob: EstimationProblem) -> GradientTerms:
    sx = steering_1d(psi_x, prob.m_x)
    sy = steering_1d(psi_y, prob.m_y)
    xi = prob.bv @ np.kron(sx, sy)
    zeta_x = prob.bv @ np.kron(derivative_multipliers(prob.m_x) * sx, sy)
    zeta_y = prob.bv @ np.kron(sx, derivative_multipliers(prob.m_y) * sy)
    return GradientTerms(xi=xi, zeta_x=zeta_x, zeta_y=zeta_y)


def ml_gradient(psi_x: float, psi_y: float, prob: EstimationProblem) -> np.ndarray:
    """Analytic gradient of the concentrated likelihood w.r.t. (psi_x, psi_y)."""
    t = gradient_terms(psi_x, psi_y, prob)
    norm2 = float(np.real(t.xi.conj() @ t.xi))
    if norm2 < _XI_TINY:
        raise DegenerateDirectionError("||xi|| = 0; gradient undefined")
    a = t.xi.conj() @ prob.y
    out = np.empty(2)
    for i, zeta in enumerate((t.zeta_x, t.zeta_y)):
        cross = 2.0 * np.real((prob.y.conj() @ zeta) * a)
        shrink = 2.0 * np.real(zeta.conj() @ t.xi)
        out[i] = (norm2 * cross - abs(a) ** 2 * shrink) / norm2**2
    return out


@dataclass
class RefineOptions:
    """Backtracking gradient-ascent settings."""

    sufficient_increase: float = 0.3
    shrink: float = 0.5
    initial_step: float = 1.0
    min_step: float = 1e-14
    tol: float = 1e-10
    max_iterations: int = 200


@dataclass
class StageOneEstimates:
    psi_x_hat: float
    psi_y_hat: float
    beta_hat: complex
    h_d_hat: complex
    objective_value: float
    iterations: int


def _closed_form_amplitudes(psi_x: float, psi_y: float, prob: EstimationProblem):
    """Plug-in estimates of (beta, h_d) at fixed phases."""
    xi = _xi(psi_x, psi_y, prob)
    norm2 = float(np.real(xi.conj() @ xi))
    if norm2 < _XI_TINY:
        beta = 0.0 + 0.0j
    else:
        beta = complex((xi.conj() @ prob.y) / norm2)
    u = steering_2d(psi_x, psi_y, prob.m_x, prob.m_y)
    h_d = complex(np.mean(prob.y - beta * (prob.v_matrix @ u)))
    return beta, h_d


def stage_one_at(psi_x: float, psi_y: float, prob: EstimationProblem) -> StageOneEstimates:
    """Stage-I estimates with the phases fixed externally (no search)."""
    beta, h_d = _closed_form_amplitudes(psi_x, psi_y, prob)
    return StageOneEstimates(
        psi_x_hat=fold_phase(psi_x), psi_y_hat=fold_phase(psi_y),
        beta_hat=beta, h_d_hat=h_d,
        objective_value=ml_objective(psi_x, psi_y, prob), iterations=0,
    )


def refine(
    psi_init: tuple[float, float],
    prob: EstimationProblem,
    opts: RefineOptions | None = None,
) -> StageOneEstimates:
    """Gradient ascent from a grid initializer until the objective stalls.

    The observation is normalized to unit norm internally so the line-search
    scales are problem-independent; the objective is invariant to that
    scaling and the amplitude estimates use the original observation.
    """
    opts = opts or RefineOptions()
    y_norm = float(np.linalg.norm(prob.y))
    if y_norm > 0.0:
        scaled = EstimationProblem(
            y=prob.y / y_norm, v_matrix=prob.v_matrix, projector=prob.projector,
            m_x=prob.m_x, m_y=prob.m_y, bv=prob.bv, by=prob.by / y_norm,
        )
    else:
        scaled = prob

    psi = np.array([fold_phase(psi_init[0]), fold_phase(psi_init[1])])
    f = ml_objective(psi[0], psi[1], scaled)
    iterations = 0
    for iterations in range(1, opts.max_iterations + 1):
        try:
            grad = ml_gradient(psi[0], psi[1], scaled)
        except DegenerateDirectionError:
            break
        if not np.all(np.isfinite(grad)) or not np.isfinite(f):
            raise FloatingPointError(
                f"non-finite objective/gradient at iteration {iterations}: psi={psi}, f={f}"
            )
        g2 = float(grad @ grad)
        if g2 == 0.0:
            break
        t = opts.initial_step
        accepted = False
        while t >= opts.min_step:
            cand = psi + t * grad
            f_cand = ml_objective(cand[0], cand[1], scaled)
            if f_cand >= f + opts.sufficient_increase * t * g2:
                accepted = True
                break
            t *= opts.shrink
        if not accepted:
            break
        psi = np.array([fold_phase(cand[0]), fold_phase(cand[1])])
        if abs(f_cand - f) < opts.tol * (1.0 + abs(f)):
            f = f_cand
            break
        f = f_cand

    beta, h_d = _closed_form_amplitudes(psi[0], psi[1], prob)
    return StageOneEstimates(
        psi_x_hat=float(psi[0]), psi_y_hat=float(psi[1]),
        beta_hat=beta, h_d_hat=h_d,
        objective_value=ml_objective(psi[0], psi[1], prob),
        iterations=iterations,
    )


def estimate_effective_stage1(pilot_obs: np.ndarray) -> complex:
    """Averaged pilot estimate of the Stage-I effective data channel."""
    pilot_obs = np.asarray(pilot_obs)
    if pilot_obs.size == 0:
        raise ValueError("pilot observations must be nonempty")
    return complex(pilot_obs.mean())


@dataclass
class StageTwoEstimates:
    h_d_hat: complex
    h_r_hat: complex
    delta: float

    def __post_init__(self):
        # wrap delta into (-pi, pi]
        self.delta = float((self.delta + np.pi) % (2 * np.pi) - np.pi)
        if self.delta == -np.pi:
            self.delta = np.pi


def ls_stage2(theta: np.ndarray, y: np.ndarray) -> StageTwoEstimates:
    """LS fit of y = Theta @ [h_d, h_r_bar] and the phase gap between them."""
    theta = np.asarray(theta, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if theta.ndim != 2 or theta.shape[1] != 2:
        raise IllPosedError(f"training matrix must be tau2 x 2, got {theta.shape}")
    if np.linalg.matrix_rank(theta) < 2:
        raise IllPosedError("training matrix is rank deficient")
    h, *_ = np.linalg.lstsq(theta, y, rcond=None)
    h_d, h_r = complex(h[0]), complex(h[1])
    delta = float(np.angle(h_d) - np.angle(h_r))
    return StageTwoEstimates(h_d_hat=h_d, h_r_hat=h_r, delta=delta)
