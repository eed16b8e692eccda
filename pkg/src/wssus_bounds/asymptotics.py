"""Wideband first-order behavior: capacity slope in 1/B and related checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel_model import GridParams, ScatteringFunction, kappa as peakiness
from .lower_bound import lb_approx
from .quadrature import DEFAULT_QUADRATURE, QuadratureSpec
from .spatial import SpatialSpectrum, majorizes
from .upper_bound import LinkBudget


@dataclass(frozen=True)
class TaylorResult:
    """Capacity ~ c1 / B as B grows; ``valid`` is the PAPR condition ``beta > 2TF/kappa``."""

    c1: float
    kappa: float
    threshold_beta: float
    valid: bool


def taylor_coefficient_from(kappa: float, TF: float, spec: SpatialSpectrum, lb: LinkBudget) -> TaylorResult:
    c1 = spec.rx_square_sum * (spec.lambda_max * lb.P) ** 2 / 2 * (lb.beta * kappa - TF)
    threshold = 2 * TF / kappa
    return TaylorResult(c1, kappa, threshold, lb.beta > threshold)


def taylor_coefficient(
    sf: ScatteringFunction,
    g: GridParams,
    spec: SpatialSpectrum,
    lb: LinkBudget,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
) -> TaylorResult:
    return taylor_coefficient_from(peakiness(sf, q), g.TF, spec, lb)


@dataclass
class SchurReport:
    c1_a: float
    c1_b: float
    tx_a_majorizes_b: bool | None
    tx_b_majorizes_a: bool | None
    rx_a_majorizes_b: bool | None
    rx_b_majorizes_a: bool | None
    verdict: str
    consistent: bool


def _relation(a, b):
    if len(a) != len(b):
        raise ValueError("spectra must have equal antenna counts")
    return majorizes(a, b), majorizes(b, a)


def schur_order_check(
    spec_a: SpatialSpectrum,
    spec_b: SpatialSpectrum,
    sf: ScatteringFunction,
    g: GridParams,
    lb: LinkBudget,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
) -> SchurReport:
    """Compare c1 of two spectra against their majorization order.

    ``a`` dominates ``b`` when both its transmit and receive spectra majorize
    those of ``b``; in that case c1(a) >= c1(b) must hold.
    """
    k = peakiness(sf, q)
    c1a = taylor_coefficient_from(k, g.TF, spec_a, lb).c1
    c1b = taylor_coefficient_from(k, g.TF, spec_b, lb).c1
    tx_ab, tx_ba = _relation(spec_a.tx_eigs, spec_b.tx_eigs)
    rx_ab, rx_ba = _relation(spec_a.rx_eigs, spec_b.rx_eigs)
    tol = 1e-12 * max(abs(c1a), abs(c1b))
    if tx_ab and rx_ab and tx_ba and rx_ba:
        verdict, ok = "equal", abs(c1a - c1b) <= tol
    elif tx_ab and rx_ab:
        verdict, ok = "a>=b", c1a >= c1b - tol
    elif tx_ba and rx_ba:
        verdict, ok = "b>=a", c1b >= c1a - tol
    else:
        verdict, ok = "incomparable", True
    return SchurReport(c1a, c1b, tx_ab, tx_ba, rx_ab, rx_ba, verdict, ok)


def richardson(h, values) -> np.ndarray:
    """Neville tableau extrapolating ``values(h)`` polynomially to ``h = 0``.

    Returns the diagonal: entry ``k`` uses the last ``k+1`` points.
    """
    h = np.asarray(h, dtype=float)
    t = np.array(values, dtype=float)
    n = len(t)
    diag = [t[-1]]
    table = t.copy()
    for k in range(1, n):
        new = np.empty(n - k)
        for i in range(n - k):
            new[i] = (h[i] * table[i + 1] - h[i + k] * table[i]) / (h[i] - h[i + k])
        table = new
        diag.append(table[-1])
    return np.array(diag)


@dataclass
class RatioResult:
    limit: float
    ladder: list
    ratios: list
    extrapolations: list
    monotone: bool
    c1: float
    flags: list = field(default_factory=list)


def default_ladder(sf: ScatteringFunction, spec: SpatialSpectrum, lb: LinkBudget, points: int = 6):
    # start where the penalty argument lambda sigma beta P / (B spread) is ~1e-2
    start = 100 * spec.lambda_max * spec.sigma_max * lb.beta * lb.P / sf.spread
    return [start * 2.0**k for k in range(points)]


def lb_ratio_analysis(
    sf: ScatteringFunction,
    g: GridParams,
    spec: SpatialSpectrum,
    lb: LinkBudget,
    B_ladder=None,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
) -> RatioResult:
    """Limit of ``B * lb_approx(B) / c1`` for one active eigenmode as ``B`` grows."""
    ladder = list(B_ladder) if B_ladder is not None else default_ladder(sf, spec, lb)
    if len(ladder) < 4 or np.any(np.diff(ladder) <= 0):
        raise ValueError("B ladder must be increasing with at least 4 points")
    c1 = taylor_coefficient(sf, g, spec, lb, q).c1
    ratios = [B * lb_approx(sf, g, spec, lb, B, 1, q).rate / c1 for B in ladder]
    ex = richardson([1.0 / B for B in ladder], ratios)
    diffs = np.diff(ratios)
    monotone = bool(np.all(diffs >= 0) or np.all(diffs <= 0))
    flags = []
    limit = float(ex[-1])
    if not monotone:
        flags.append("non-monotone ladder")
        limit = float(ratios[-1])
    if not 0 < limit <= 1 + 1e-9:
        flags.append("limit outside (0, 1]")
    return RatioResult(limit, ladder, ratios, ex.tolist(), monotone, c1, flags)
