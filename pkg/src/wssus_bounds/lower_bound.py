"""Lower bound with constant-modulus inputs and time sharing, plus its wideband approximation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .channel_model import GridParams, ScatteringFunction, log_penalty_integral
from .mi import CONTINUOUS, McSpec, MiSampler
from .quadrature import DEFAULT_QUADRATURE, QuadratureSpec
from .spatial import SpatialSpectrum
from .toeplitz import CIRCULANT, EXACT, EXACT_K_MAX, build_freq_spectral_matrix, toeplitz_penalty
from .upper_bound import BoundValue, LinkBudget, _check_bandwidth

INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_max(func: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6):
    """Maximize a unimodal ``func`` on ``[lo, hi]``; endpoints are always candidates.

    Returns ``(argmax, max, evaluations)``.
    """
    if hi <= lo:
        return lo, func(lo), 1
    cache: dict[float, float] = {}

    def f(x):
        if x not in cache:
            cache[x] = func(x)
        return cache[x]

    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    while b - a > tol * max(1.0, abs(hi)):
        if f(c) >= f(d):
            b, d = d, c
            c = b - INV_PHI * (b - a)
        else:
            a, c = c, d
            d = a + INV_PHI * (b - a)
    best = max([lo, hi, 0.5 * (a + b)], key=f)
    return best, f(best), len(cache)


def slots(B: float, g: GridParams) -> int:
    return max(1, round(B / g.F))


@dataclass
class LowerBoundContext:
    """Reusable state for lower-bound evaluations of one scenario.

    Holds the MI samplers (one per active-eigenmode count, shared across
    bandwidths and time-sharing factors) and caches spectral matrices per K.
    """

    sf: ScatteringFunction
    g: GridParams
    spec: SpatialSpectrum
    lb: LinkBudget
    mc: McSpec = field(default_factory=McSpec)
    phase_model: str = CONTINUOUS
    exact_k_max: int = EXACT_K_MAX
    quadrature: QuadratureSpec = DEFAULT_QUADRATURE
    _samplers: dict = field(default_factory=dict, repr=False)
    _fsm: dict = field(default_factory=dict, repr=False)

    def sampler(self, q: int) -> MiSampler:
        if q not in self._samplers:
            self._samplers[q] = MiSampler(self.spec, q, self.mc, self.phase_model)
        return self._samplers[q]

    def spectral(self, K: int):
        if K not in self._fsm:
            kind = EXACT if K <= self.exact_k_max else CIRCULANT
            self._fsm[K] = build_freq_spectral_matrix(
                self.sf, self.g, K, kind, self.quadrature, self.exact_k_max
            )
        return self._fsm[K]


def _l1_terms(ctx: LowerBoundContext, B: float, q: int, gamma: float):
    g, lb, spec = ctx.g, ctx.lb, ctx.spec
    fsm = ctx.spectral(slots(B, g))
    snr = gamma * lb.P * g.TF / (q * B)  # per active entry, per slot
    est = ctx.sampler(q).estimate(snr)
    scale = B / (gamma * g.TF)
    mi_rate = scale * est.value
    pen = 0.0
    for lam in spec.tx_eigs[:q]:
        for sigma in spec.rx_eigs:
            pen += toeplitz_penalty(fsm, lam * sigma * snr)
    penalty = pen / (gamma * g.T)
    return mi_rate, penalty, scale * est.halfwidth, scale * est.upper, est, fsm


def lower_bound_l1_q(ctx: LowerBoundContext, B: float, q: int) -> BoundValue:
    """Lower bound for a fixed number ``q`` of active transmit eigenmodes, maximized over gamma."""
    _check_bandwidth(B, ctx.g)

    def objective(gamma):
        mi_rate, penalty, *_ = _l1_terms(ctx, B, q, gamma)
        return mi_rate - penalty

    gamma, _, evals = golden_section_max(objective, 1.0, ctx.lb.beta)
    mi_rate, penalty, hw, mi_upper, est, fsm = _l1_terms(ctx, B, q, gamma)
    return BoundValue(
        rate=mi_rate - penalty,
        awgn_term=mi_rate,
        penalty_term=penalty,
        gamma_star=gamma,
        q_used=q,
        diagnostics={
            "mc_halfwidth": hw,
            "mi_rate_upper": mi_upper,
            "mc_target_met": est.target_met,
            "gamma_evaluations": evals,
            "penalty_path": fsm.kind,
            "penalty_fallback": fsm.fallback,
            "K": fsm.K,
        },
    )


def lower_bound_l1(
    sf: ScatteringFunction,
    g: GridParams,
    spec: SpatialSpectrum,
    lb: LinkBudget,
    B: float,
    q_range: Iterable[int] | None = None,
    mc: McSpec | None = None,
    ctx: LowerBoundContext | None = None,
) -> BoundValue:
    """Best lower bound over the active-eigenmode counts in ``q_range``."""
    if ctx is None:
        ctx = LowerBoundContext(sf, g, spec, lb, mc or McSpec())
    qs = list(q_range) if q_range is not None else list(range(1, spec.m_t + 1))
    per_q = {q: lower_bound_l1_q(ctx, B, q) for q in qs}
    best = max(per_q.values(), key=lambda v: v.rate)
    best.diagnostics["per_q"] = {q: v.rate for q, v in per_q.items()}
    return best


@dataclass(frozen=True)
class ApproxTerms:
    linear: float
    quadratic: float
    penalty: float

    @property
    def rate(self) -> float:
        return self.linear - self.quadratic - self.penalty


def lb_approx_terms(
    sf: ScatteringFunction,
    g: GridParams,
    spec: SpatialSpectrum,
    lb: LinkBudget,
    B: float,
    q: int,
    gamma: float,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> ApproxTerms:
    lam = spec.tx_eigs[:q]
    sig = spec.rx_eigs
    m_r = spec.m_r
    linear = m_r * lb.P / q * lam.sum()
    quadratic = (
        gamma * lb.P**2 * g.TF / B
        * (lam.sum() ** 2 * np.sum(sig**2) + m_r**2 * np.sum(lam**2))
        / (2 * q**2)
    )
    penalty = 0.0
    for lt in lam:
        for sr in sig:
            penalty += log_penalty_integral(sf, lt * sr * gamma * lb.P / (q * B), quad)
    penalty *= B / gamma
    return ApproxTerms(float(linear), float(quadratic), float(penalty))


def lb_approx(
    sf: ScatteringFunction,
    g: GridParams,
    spec: SpatialSpectrum,
    lb: LinkBudget,
    B: float,
    q: int,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> BoundValue:
    """Wideband approximation of the lower bound for ``q`` active eigenmodes."""
    if not B > 0:
        raise ValueError("bandwidth must be positive")
    if not 1 <= q <= spec.m_t:
        raise ValueError(f"q={q} outside [1, {spec.m_t}]")
    gamma, _, _ = golden_section_max(
        lambda x: lb_approx_terms(sf, g, spec, lb, B, q, x, quad).rate, 1.0, lb.beta
    )
    t = lb_approx_terms(sf, g, spec, lb, B, q, gamma, quad)
    return BoundValue(
        rate=t.rate,
        awgn_term=t.linear - t.quadratic,
        penalty_term=t.penalty,
        gamma_star=gamma,
        q_used=q,
        diagnostics={"linear": t.linear, "quadratic": t.quadratic},
    )
