"""Spatial correlation spectra, majorization, and the Hadamard determinant lemma."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

EIG_CLAMP = 1e-10
HERMITIAN_ATOL = 1e-12
MAJORIZATION_SLACK = 1e-9


class TraceRescaledWarning(UserWarning):
    pass


def _descending(values) -> np.ndarray:
    return np.sort(np.asarray(values, dtype=float))[::-1]


@dataclass(frozen=True, eq=False)
class SpatialSpectrum:
    """Descending eigenvalues of the transmit and receive correlation matrices.

    Each vector is normalized so that it sums to its own length.
    """

    tx_eigs: np.ndarray
    rx_eigs: np.ndarray

    def __post_init__(self):
        tx = np.asarray(self.tx_eigs, dtype=float)
        rx = np.asarray(self.rx_eigs, dtype=float)
        for name, v in (("tx_eigs", tx), ("rx_eigs", rx)):
            if v.ndim != 1 or len(v) == 0:
                raise ValueError(f"{name} must be a non-empty vector")
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite and nonnegative")
            if np.any(np.diff(v) > 0):
                raise ValueError(f"{name} must be in descending order")
            if abs(v.sum() - len(v)) > 1e-9 * len(v):
                raise ValueError(f"{name} must sum to {len(v)} (got {v.sum():.12g})")
        object.__setattr__(self, "tx_eigs", tx)
        object.__setattr__(self, "rx_eigs", rx)

    @classmethod
    def from_eigenvalues(cls, tx, rx, normalize: bool = False) -> SpatialSpectrum:
        """Build from unordered eigenvalue lists; optionally rescale to trace = dimension."""
        tx, rx = _descending(tx), _descending(rx)
        if normalize:
            tx = tx * len(tx) / tx.sum()
            rx = rx * len(rx) / rx.sum()
        return cls(tx, rx)

    @classmethod
    def uncorrelated(cls, m_t: int, m_r: int) -> SpatialSpectrum:
        return cls(np.ones(m_t), np.ones(m_r))

    @property
    def m_t(self) -> int:
        return len(self.tx_eigs)

    @property
    def m_r(self) -> int:
        return len(self.rx_eigs)

    @property
    def lambda_max(self) -> float:
        return float(self.tx_eigs[0])

    @property
    def sigma_max(self) -> float:
        return float(self.rx_eigs[0])

    @property
    def rx_square_sum(self) -> float:
        return float(np.sum(self.rx_eigs**2))


def correlation_matrix(matrix) -> np.ndarray:
    """Validate a correlation matrix: square and Hermitian to 1e-12 absolute."""
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("correlation matrix must be square")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_ATOL:
        raise ValueError("correlation matrix is not Hermitian")
    return a


def matrix_eigenvalues(matrix, label: str = "matrix") -> np.ndarray:
    """Descending, clamped eigenvalues rescaled so their sum is the dimension."""
    a = correlation_matrix(matrix)
    n = a.shape[0]
    eigs = np.linalg.eigvalsh((a + a.conj().T) / 2)
    if eigs.min() < -EIG_CLAMP:
        raise ValueError(f"{label} is not nonnegative definite (min eigenvalue {eigs.min():.3e})")
    eigs = np.where(eigs < EIG_CLAMP, 0.0, eigs)
    trace = float(np.real(np.trace(a)))
    if abs(eigs.sum() - trace) > 1e-8 * max(abs(trace), 1.0):
        raise ValueError(f"{label}: eigenvalue sum does not reproduce the trace")
    if abs(trace - n) > 1e-6 * n:
        warnings.warn(
            f"{label} has trace {trace:.6g}, rescaled to {n}", TraceRescaledWarning, stacklevel=3
        )
        eigs = eigs * n / eigs.sum()
    return eigs[::-1].copy()


def spectrum_from_matrices(rt, rr) -> SpatialSpectrum:
    return SpatialSpectrum.from_eigenvalues(
        matrix_eigenvalues(rt, "transmit correlation"),
        matrix_eigenvalues(rr, "receive correlation"),
        normalize=True,
    )


def majorizes(a, b) -> bool:
    """True iff ``a`` majorizes ``b`` (prefix sums of sorted ``a`` dominate)."""
    a, b = _descending(a), _descending(b)
    if a.shape != b.shape:
        raise ValueError("majorization needs vectors of equal length")
    sa, sb = a.sum(), b.sum()
    if abs(sa - sb) > 1e-9 * max(abs(sa), abs(sb), 1e-300):
        raise ValueError(f"majorization undefined for unequal sums ({sa:g} vs {sb:g})")
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - MAJORIZATION_SLACK))


@dataclass(frozen=True)
class DeterminantCheck:
    holds: bool
    lhs: float
    rhs: float


def hadamard_det_inequality_holds(a, b) -> DeterminantCheck:
    """Check ``det(I + A o B) >= det(I + (I o A) B)`` for nonnegative definite A, B."""
    a = correlation_matrix(a)
    b = correlation_matrix(b)
    if a.shape != b.shape:
        raise ValueError("A and B must have the same dimension")
    n = a.shape[0]
    eye = np.eye(n)
    lhs = float(np.real(np.linalg.det(eye + a * b)))
    rhs = float(np.real(np.linalg.det(eye + np.diag(np.diag(a)) @ b)))
    return DeterminantCheck(lhs >= rhs - 1e-9 * abs(rhs), lhs, rhs)
