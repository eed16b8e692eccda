"""Upper bound on noncoherent capacity and its companions.

Rates are in nats/s throughout.  ``P`` is the receive power normalized by the
noise spectral density (unit 1/s) and ``beta`` the peak-to-average power
ratio of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel_model import (
    BrickScattering,
    GridParams,
    ScatteringFunction,
    log_penalty_integral,
)
from .quadrature import DEFAULT_QUADRATURE, QuadratureSpec
from .spatial import SpatialSpectrum

ALPHA_RTOL = 1e-9


@dataclass(frozen=True)
class LinkBudget:
    P: float
    beta: float = 1.0

    def __post_init__(self):
        if not self.P > 0:
            raise ValueError("P must be positive")
        if not self.beta >= 1:
            raise ValueError("beta (PAPR) must be >= 1")


@dataclass
class BoundValue:
    """A bound evaluation with its decomposition ``rate = awgn_term - penalty_term``."""

    rate: float
    awgn_term: float
    penalty_term: float
    alpha_star: float | None = None
    gamma_star: float | None = None
    q_used: int | None = None
    pinned: bool = False
    diagnostics: dict = field(default_factory=dict)


def _check_bandwidth(B: float, g: GridParams) -> None:
    if not B >= g.F * (1 - 1e-12):
        raise ValueError(f"bandwidth B={B:g} Hz is below one frequency slot F={g.F:g} Hz")


def penalty_psi(
    sf: ScatteringFunction,
    spec: SpatialSpectrum,
    lb: LinkBudget,
    B: float,
    r: int,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    """Channel-uncertainty penalty rate of receive eigenmode ``r`` (nats/s per unit alpha)."""
    if not B > 0:
        raise ValueError("bandwidth must be positive")
    if not 0 <= r < spec.m_r:
        raise IndexError(f"receive index {r} out of range")
    lam = spec.lambda_max
    scale = lam * spec.rx_eigs[r] * lb.beta * lb.P / B
    return B / (lam * lb.beta) * log_penalty_integral(sf, scale, q)


def _awgn_terms(alpha, sigmas, lb, g, B):
    # (B/TF) log(1 + alpha sigma_r P TF / B) per receive eigenmode
    return B / g.TF * np.log1p(alpha * sigmas * lb.P * g.TF / B)


def alpha_derivative(alpha, sigmas, psis, lb, g, B) -> float:
    return float(np.sum(sigmas * lb.P / (1 + alpha * sigmas * lb.P * g.TF / B) - psis))


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    spread_ok: bool
    snr_ok: bool
    snr: float
    snr_threshold: float

    @property
    def snr_threshold_db(self) -> float:
        return 10 * math.log10(self.snr_threshold) if self.snr_threshold > 0 else -math.inf


def snr_threshold(spread: float, g: GridParams, lam_sigma_max: float, beta: float) -> float:
    """Largest ``P/B`` for which the sufficient condition guarantees ``alpha* = lambda_max``."""
    return spread / (lam_sigma_max * beta) * math.expm1(beta / (2 * g.TF * spread))


def sufficient_condition_holds(
    spread: float, g: GridParams, spec: SpatialSpectrum, lb: LinkBudget, B: float
) -> ConditionReport:
    spread_ok = spread <= lb.beta / (3 * g.TF)
    try:
        threshold = snr_threshold(spread, g, spec.lambda_max * spec.sigma_max, lb.beta)
    except OverflowError:
        threshold = math.inf
    snr = lb.P / B
    snr_ok = 0 <= snr < threshold
    return ConditionReport(spread_ok and snr_ok, spread_ok, snr_ok, snr, threshold)


def upper_bound_u1(
    sf: ScatteringFunction,
    g: GridParams,
    spec: SpatialSpectrum,
    lb: LinkBudget,
    B: float,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
    short_circuit: bool = True,
) -> BoundValue:
    """Supremum over ``alpha in [0, lambda_max]`` of the concave upper-bound objective.

    The maximizer is located by bisection on the sign of the derivative.  When
    the sufficient condition holds (and ``short_circuit`` is set) it is taken
    to be ``lambda_max`` without search.
    """
    _check_bandwidth(B, g)
    lam = spec.lambda_max
    sigmas = spec.rx_eigs
    psis = np.array([penalty_psi(sf, spec, lb, B, r, q) for r in range(spec.m_r)])
    cond = sufficient_condition_holds(sf.spread, g, spec, lb, B)
    iterations = 0
    if short_circuit and cond.holds:
        alpha = lam
    elif alpha_derivative(lam, sigmas, psis, lb, g, B) >= 0:
        alpha = lam
    else:
        lo, hi = 0.0, lam
        while hi - lo > ALPHA_RTOL * lam:
            mid = 0.5 * (lo + hi)
            if alpha_derivative(mid, sigmas, psis, lb, g, B) > 0:
                lo = mid
            else:
                hi = mid
            iterations += 1
        alpha = 0.5 * (lo + hi)
    awgn = float(np.sum(_awgn_terms(alpha, sigmas, lb, g, B)))
    penalty = float(alpha * np.sum(psis))
    return BoundValue(
        rate=awgn - penalty,
        awgn_term=awgn,
        penalty_term=penalty,
        alpha_star=alpha,
        pinned=alpha == lam,
        diagnostics={
            "bisection_iterations": iterations,
            "condition_holds": cond.holds,
            "psi": psis.tolist(),
        },
    )


def brick_upper_bound(
    spec: SpatialSpectrum, lb: LinkBudget, g: GridParams, spread: float, B: float
) -> BoundValue:
    """Closed-form bound for the brick-shaped scattering function with ``alpha = lambda_max``."""
    lam = spec.lambda_max
    x = lam * spec.rx_eigs
    awgn = float(np.sum(B / g.TF * np.log1p(x * lb.P * g.TF / B)))
    penalty = float(np.sum(B * spread / lb.beta * np.log1p(x * lb.beta * lb.P / (B * spread))))
    return BoundValue(awgn - penalty, awgn, penalty, alpha_star=lam, pinned=True)


def coherent_jensen_bound(spec: SpatialSpectrum, lb: LinkBudget, g: GridParams, B: float) -> float:
    """Jensen upper bound on coherent capacity with average-power-limited input."""
    return float(np.sum(B / g.TF * np.log1p(spec.rx_eigs * lb.P * g.TF / B)))


def worst_case_brick(sf: ScatteringFunction) -> BrickScattering:
    """Brick with the same support as ``sf`` (largest penalty among unit-volume functions)."""
    return BrickScattering(sf.nu0, sf.tau0)
