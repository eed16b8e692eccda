"""Matrix-valued spectral density across frequency slots and its log-det penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .channel_model import BrickScattering, GridParams, ScatteringFunction, log_penalty_integral
from .quadrature import DEFAULT_QUADRATURE, QuadratureSpec, axis_nodes

EXACT_K_MAX = 4096

EXACT = "exact"
CIRCULANT = "circulant"


@dataclass(eq=False)
class FreqSpectralMatrix:
    """K x K spectral density ``C(theta)`` of one component channel.

    The exact representation stores, for a set of Doppler quadrature nodes,
    the quadrature weight (in ``theta``) and the eigenvalues of the Hermitian
    Toeplitz matrix at that node.  For the brick the matrix is the same on the
    whole band ``|theta| <= nu0 T``, so a single node of weight ``2 nu0 T``
    suffices.  The circulant representation keeps only what is needed to
    evaluate the scalar double integral.
    """

    sf: ScatteringFunction
    grid: GridParams
    K: int
    kind: str
    theta_weights: np.ndarray | None = None
    eigenvalues: np.ndarray | None = None
    quadrature: QuadratureSpec = DEFAULT_QUADRATURE
    fallback: bool = False

    @property
    def band(self) -> float:
        return self.sf.nu0 * self.grid.T


def brick_generator(sf: BrickScattering, g: GridParams, K: int) -> np.ndarray:
    """First column of the on-band Toeplitz kernel of the brick."""
    w = sf.tau0 * g.F
    m = np.arange(K, dtype=float)
    col = np.empty(K)
    col[0] = 2 * w
    col[1:] = np.sin(2 * np.pi * w * m[1:]) / (np.pi * m[1:])
    return col / (g.TF * sf.spread)


def _grid_generators(sf: ScatteringFunction, g: GridParams, K: int, q: QuadratureSpec):
    # Doppler nodes over the lattice cells; delay nodes fine enough for exp(j 2 pi m F tau)
    nu_edges, tau_edges = sf.cell_edges()
    nu_nodes, nu_w = axis_nodes(nu_edges, q.nodes_per_axis, "gauss-legendre", 1)
    omega = 2 * np.pi * (K - 1) * g.F
    widest = float(np.max(np.diff(tau_edges)))
    level = max(1, math.ceil(math.log2(max(omega * widest / 2, 1.0))) + 1)
    tau_nodes, tau_w = axis_nodes(tau_edges, q.nodes_per_axis, "gauss-legendre", level)
    values = sf.evaluate_tensor(nu_nodes, tau_nodes)  # (n_nu, n_tau)
    phase = np.exp(2j * np.pi * g.F * np.outer(tau_nodes, np.arange(K)))  # (n_tau, K)
    gens = (values * tau_w[None, :]) @ phase / g.T
    # theta = nu T, so d theta = T d nu
    return nu_w * g.T, gens


def build_freq_spectral_matrix(
    sf: ScatteringFunction,
    g: GridParams,
    K: int,
    kind: str = EXACT,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
    exact_k_max: int = EXACT_K_MAX,
) -> FreqSpectralMatrix:
    if K < 1:
        raise ValueError("K must be >= 1")
    if kind == CIRCULANT:
        return FreqSpectralMatrix(sf, g, K, CIRCULANT, quadrature=q)
    if kind != EXACT:
        raise ValueError(f"unknown representation {kind!r}")
    if K > exact_k_max:
        raise ValueError(f"K={K} exceeds the exact-path cap {exact_k_max}; request the circulant path")
    if isinstance(sf, BrickScattering):
        weights = np.array([2 * sf.nu0 * g.T])
        gens = brick_generator(sf, g, K)[None, :].astype(complex)
    else:
        weights, gens = _grid_generators(sf, g, K, q)
    try:
        eigs = np.array([np.linalg.eigvalsh(toeplitz(col, col.conj())) for col in gens])
    except np.linalg.LinAlgError:
        return FreqSpectralMatrix(sf, g, K, CIRCULANT, quadrature=q, fallback=True)
    eigs = np.clip(eigs, 0.0, None)
    return FreqSpectralMatrix(sf, g, K, EXACT, weights, eigs, q)


def spectral_matrix(sf: ScatteringFunction, g: GridParams, K: int, theta: float) -> np.ndarray:
    """Dense ``C(theta)`` for a brick (used for inspection and tests)."""
    if not isinstance(sf, BrickScattering):
        raise TypeError("dense evaluation is only provided for the brick")
    if abs(theta) > sf.nu0 * g.T:
        return np.zeros((K, K))
    return toeplitz(brick_generator(sf, g, K))


def toeplitz_penalty(fsm: FreqSpectralMatrix, c: float) -> float:
    """Integral over theta of ``log det(I_K + c C(theta))``."""
    if c < 0:
        raise ValueError("scale c must be nonnegative")
    if c == 0:
        return 0.0
    if fsm.kind == CIRCULANT:
        return circulant_penalty(fsm.sf, fsm.grid, fsm.K, c, fsm.quadrature)
    return float(np.sum(fsm.theta_weights * np.sum(np.log1p(c * fsm.eigenvalues), axis=1)))


def circulant_penalty(sf, g: GridParams, K: int, c: float, q: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    # K * double integral of log(1 + c * spectral density), written in (nu, tau)
    return K * g.TF * log_penalty_integral(sf, c / g.TF, q)
