"""Composite tensor-product quadrature over rectangular cell partitions.

:func:`integrate_cells` handles a generic integrand: every cell is split
``2**level`` times per axis and the subdivision doubles until two successive
levels agree.  :func:`integrate_bilinear` handles functions of a bilinear
lattice interpolant (the sampled scattering function) and refines each cell
on its own, so near-singular corners (``log(1 + c f)`` with large ``c`` next
to a zero sample) are resolved without refining the whole domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when successive refinements fail to agree within tolerance."""

    def __init__(self, message: str, value: float, error_estimate: float):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


RULES = ("gauss-legendre", "midpoint")


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_per_axis: int = 8
    rule: str = "gauss-legendre"
    tolerance: float = 1e-10
    max_refinements: int = 16

    def __post_init__(self):
        if self.nodes_per_axis < 8:
            raise ValueError("nodes_per_axis must be >= 8")
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    level: int
    evaluations: int


@lru_cache(maxsize=32)
def _reference_rule(n: int, rule: str) -> tuple[np.ndarray, np.ndarray]:
    # nodes/weights on [0, 1]
    if rule == "gauss-legendre":
        x, w = np.polynomial.legendre.leggauss(n)
        return (x + 1.0) / 2.0, w / 2.0
    x = (np.arange(n) + 0.5) / n
    return x, np.full(n, 1.0 / n)


def axis_nodes(edges, n: int, rule: str = "gauss-legendre", level: int = 0):
    """Nodes and weights of the composite rule on the partition ``edges``.

    Every cell ``[edges[i], edges[i+1]]`` is split into ``2**level`` equal
    sub-cells carrying an ``n``-point rule each.
    """
    edges = np.asarray(edges, dtype=float)
    sub = 2**level
    t, w = _reference_rule(n, rule)
    lo, hi = edges[:-1], edges[1:]
    h = (hi - lo) / sub
    starts = lo[:, None] + h[:, None] * np.arange(sub)[None, :]
    nodes = starts[:, :, None] + h[:, None, None] * t[None, None, :]
    weights = np.broadcast_to(h[:, None, None] * w[None, None, :], nodes.shape)
    return nodes.ravel(), np.array(weights).ravel()


def integrate_cells(
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x_edges,
    y_edges,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    abs_floor: float = 1e-300,
) -> QuadratureResult:
    """Integrate ``func`` over the rectangle partitioned by ``x_edges`` x ``y_edges``.

    ``func(x, y)`` receives 1-D node arrays and must return the values on the
    tensor grid, shape ``(len(x), len(y))``.  Raises :class:`QuadratureError`
    if the relative change between the last two levels exceeds
    ``spec.tolerance`` after ``spec.max_refinements`` doublings.
    """
    previous = None
    evaluations = 0
    for level in range(spec.max_refinements + 1):
        xn, xw = axis_nodes(x_edges, spec.nodes_per_axis, spec.rule, level)
        yn, yw = axis_nodes(y_edges, spec.nodes_per_axis, spec.rule, level)
        values = func(xn, yn)
        evaluations += values.size
        current = float(xw @ values @ yw)
        if previous is not None:
            err = abs(current - previous)
            if err <= spec.tolerance * max(abs(current), abs_floor):
                return QuadratureResult(current, err, level, evaluations)
        previous = current
    raise QuadratureError(
        f"quadrature did not reach relative tolerance {spec.tolerance:g} "
        f"after {spec.max_refinements} refinements (change {err:.3e})",
        value=current,
        error_estimate=err,
    )


def _bilinear_rule(cells: np.ndarray, g, t: np.ndarray, w: np.ndarray) -> np.ndarray:
    # cells: (m, 8) rows of x0, hx, y0, hy, f00, f10, f01, f11
    s = t[None, :, None]
    u = t[None, None, :]
    f00, f10, f01, f11 = (cells[:, k, None, None] for k in range(4, 8))
    f = f00 * (1 - s) * (1 - u) + f10 * s * (1 - u) + f01 * (1 - s) * u + f11 * s * u
    return cells[:, 1] * cells[:, 3] * np.einsum("mij,i,j->m", g(f), w, w)


def _split(cells: np.ndarray) -> np.ndarray:
    # four children per cell, in order (0,0), (1,0), (0,1), (1,1); corner values stay exact
    x0, hx, y0, hy, f00, f10, f01, f11 = cells.T
    fm0, fm1 = (f00 + f10) / 2, (f01 + f11) / 2
    f0m, f1m = (f00 + f01) / 2, (f10 + f11) / 2
    fmm = (f00 + f10 + f01 + f11) / 4
    hx2, hy2 = hx / 2, hy / 2
    kids = [
        (x0, y0, f00, fm0, f0m, fmm),
        (x0 + hx2, y0, fm0, f10, fmm, f1m),
        (x0, y0 + hy2, f0m, fmm, f01, fm1),
        (x0 + hx2, y0 + hy2, fmm, f1m, fm1, f11),
    ]
    out = np.stack([np.stack([kx, hx2, ky, hy2, a, b, c, d], axis=1) for kx, ky, a, b, c, d in kids], axis=1)
    return out.reshape(-1, 8)


def integrate_bilinear(
    g: Callable[[np.ndarray], np.ndarray],
    x_edges,
    y_edges,
    values,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    abs_floor: float = 1e-300,
) -> QuadratureResult:
    """Integrate ``g(f(x, y))`` where ``f`` bilinearly interpolates ``values`` on the lattice.

    Refinement stops once the summed error estimate is within
    ``tolerance * |integral|``.  Until then a cell is accepted when its
    one-level refinement changes it by at most its area share of that
    budget; other cells are split in four.  Raises :class:`QuadratureError` after ``max_refinements`` levels.
    """
    x = np.asarray(x_edges, dtype=float)
    y = np.asarray(y_edges, dtype=float)
    v = np.asarray(values, dtype=float)
    t, w = _reference_rule(spec.nodes_per_axis, spec.rule)
    x0, y0 = np.meshgrid(x[:-1], y[:-1], indexing="ij")
    hx, hy = np.meshgrid(np.diff(x), np.diff(y), indexing="ij")
    cells = np.stack(
        [x0.ravel(), hx.ravel(), y0.ravel(), hy.ravel(),
         v[:-1, :-1].ravel(), v[1:, :-1].ravel(), v[:-1, 1:].ravel(), v[1:, 1:].ravel()],
        axis=1,
    )
    total_area = float(np.sum(hx * hy))
    coarse = _bilinear_rule(cells, g, t, w)
    per_cell = spec.nodes_per_axis**2
    evaluations = len(cells) * per_cell
    done, done_err = 0.0, 0.0
    for level in range(spec.max_refinements + 1):
        kids = _split(cells)
        kid_vals = _bilinear_rule(kids, g, t, w).reshape(-1, 4)
        evaluations += len(kids) * per_cell
        fine = kid_vals.sum(axis=1)
        err = np.abs(fine - coarse)
        estimate = done + float(fine.sum())
        share = cells[:, 1] * cells[:, 3] / total_area
        ok = err <= spec.tolerance * max(abs(estimate), abs_floor) * share
        if done_err + float(err.sum()) <= spec.tolerance * max(abs(estimate), abs_floor):
            # the summed error already meets the tolerance; remaining cells need no split
            return QuadratureResult(estimate, done_err + float(err.sum()), level, evaluations)
        done += float(fine[ok].sum())
        done_err += float(err[ok].sum())
        cells = kids.reshape(-1, 4, 8)[~ok].reshape(-1, 8)
        coarse = kid_vals[~ok].ravel()
    value = done + float(fine[~ok].sum())
    err_total = done_err + float(err[~ok].sum())
    raise QuadratureError(
        f"quadrature did not reach relative tolerance {spec.tolerance:g} "
        f"after {spec.max_refinements} refinements (error estimate {err_total / max(abs(value), abs_floor):.3e})",
        value=value,
        error_estimate=err_total,
    )
