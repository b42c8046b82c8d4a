"""Complex-vector primitives: steering vectors, DFT matrices, centering projector.

All phases are normalized to pi, i.e. a 1D steering vector with normalized
phase ``phi`` has entries exp(j*k*pi*phi). Element indices are 0-based.
"""

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when an array dimension is zero or inconsistent."""


def fold_phase(psi: float) -> float:
    """Reduce a normalized phase modulo 2 into [-1, 1)."""
    return float((psi + 1.0) % 2.0 - 1.0)


def steering_1d(phi: float, m_count: int) -> np.ndarray:
    """1D steering vector [1, e^{j*pi*phi}, ..., e^{j*(m-1)*pi*phi}]."""
    if m_count < 1:
        raise DimensionError(f"m_count must be >= 1, got {m_count}")
    return np.exp(1j * np.pi * phi * np.arange(m_count))


def steering_2d(psi_x: float, psi_y: float, m_x: int, m_y: int) -> np.ndarray:
    """2D UPA steering vector: Kronecker product of the two 1D factors."""
    return np.kron(steering_1d(psi_x, m_x), steering_1d(psi_y, m_y))


@dataclass(frozen=True)
class SteeringParams:
    """Effective 2D steering phases (normalized to pi, folded into [-1, 1))."""

    psi_x: float
    psi_y: float
    m_x: int
    m_y: int

    def __post_init__(self):
        if self.m_x < 1 or self.m_y < 1:
            raise DimensionError("array dimensions must be positive")
        object.__setattr__(self, "psi_x", fold_phase(self.psi_x))
        object.__setattr__(self, "psi_y", fold_phase(self.psi_y))

    @property
    def m(self) -> int:
        return self.m_x * self.m_y

    def vector(self) -> np.ndarray:
        return steering_2d(self.psi_x, self.psi_y, self.m_x, self.m_y)


def dft_matrix(m: int) -> np.ndarray:
    """m x m DFT matrix with forward exponent -j*2*pi/m (unnormalized)."""
    if m < 1:
        raise DimensionError(f"m must be >= 1, got {m}")
    idx = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / m)


@dataclass(frozen=True)
class CenteringProjector:
    """Orthogonal projector onto the zero-mean subspace: B = I - 11^T/tau.

    Applying B to a pilot observation vector removes any constant offset,
    which is how the direct-channel unknown is eliminated from the Stage-I
    likelihood.
    """

    tau: int
    matrix: np.ndarray = field(repr=False)

    def apply(self, y: np.ndarray) -> np.ndarray:
        """B @ y, computed without materializing the product."""
        y = np.asarray(y)
        return y - y.mean(axis=0, keepdims=y.ndim > 1)


def centering_projector(tau: int) -> CenteringProjector:
    if tau < 1:
        raise DimensionError(f"tau must be >= 1, got {tau}")
    mat = np.eye(tau) - np.ones((tau, tau)) / tau
    return CenteringProjector(tau=tau, matrix=mat)
