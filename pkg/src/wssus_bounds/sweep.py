"""Scenario-level drivers: bandwidth sweeps, condition checks, asymptotics and UWB reports.

Every function here returns plain data (lists, dicts, floats) so the HTTP
service and the CLI can serialize it without further conversion.  Rates are
computed in nats/s and converted to bits/s only at the output boundary.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .asymptotics import lb_ratio_analysis, taylor_coefficient
from .channel_model import BrickScattering, GridParams, kappa
from .lower_bound import LowerBoundContext, lb_approx, lower_bound_l1_q
from .quadrature import QuadratureError
from .scenario import Scenario
from .upper_bound import coherent_jensen_bound, sufficient_condition_holds, upper_bound_u1

LN2 = math.log(2)


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its requested accuracy."""

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


def unit_divisor(units: str) -> float:
    """Rates are divided by this value (bits/s = nats/s / ln 2)."""
    if units == "nats":
        return 1.0
    if units == "bits":
        return LN2
    raise ValueError(f"unknown units {units!r}")


def _context(sc: Scenario) -> LowerBoundContext:
    mc = sc.config.mc
    ctx = LowerBoundContext(
        sc.sf, sc.grid, sc.spectrum, sc.link, sc.mc_spec(1), mc.phase_model,
        sc.config.exact_k_max, sc.quadrature,
    )
    # samplers are created up front so worker threads only read them
    for q in sc.q_range:
        ctx.sampler(q)
    return ctx


def _check_mc(value, where: str):
    if not value.diagnostics.get("mc_target_met", True):
        raise NumericalError(
            f"Monte Carlo half-width above the requested confidence at {where}",
            {"halfwidth": value.diagnostics["mc_halfwidth"]},
        )


def _evaluate_point(sc: Scenario, ctx: LowerBoundContext, B: float) -> dict:
    try:
        u1 = upper_bound_u1(sc.sf, sc.grid, sc.spectrum, sc.link, B, sc.quadrature)
        row = {
            "B_hz": B,
            "U1": u1.rate,
            "Ucoh": coherent_jensen_bound(sc.spectrum, sc.link, sc.grid, B),
        }
        lowers = {}
        for q in range(1, sc.spectrum.m_t + 1):
            if q in sc.q_range:
                lowers[q] = lower_bound_l1_q(ctx, B, q)
                _check_mc(lowers[q], f"B={B:g} Hz, q={q}")
                row[f"L1_q{q}"] = lowers[q].rate
                row[f"L1_hw_q{q}"] = lowers[q].diagnostics["mc_halfwidth"]
            else:
                row[f"L1_q{q}"] = math.nan
                row[f"L1_hw_q{q}"] = math.nan
        for q in range(1, sc.spectrum.m_t + 1):
            row[f"LBapprox_q{q}"] = (
                lb_approx(sc.sf, sc.grid, sc.spectrum, sc.link, B, q, sc.quadrature).rate
                if q in sc.q_range else math.nan
            )
    except QuadratureError as exc:
        raise NumericalError(str(exc), {"B_hz": B, "error_estimate": exc.error_estimate}) from exc
    best = max(lowers.values(), key=lambda v: v.rate)
    row["alpha_star"] = u1.alpha_star
    row["gamma_star"] = best.gamma_star
    row["condition_ok"] = bool(u1.diagnostics["condition_holds"])
    row["mc_halfwidth"] = best.diagnostics["mc_halfwidth"]
    return row


def columns(m_t: int) -> list[str]:
    return (
        ["B_hz", "U1", "Ucoh"]
        + [f"L1_q{q}" for q in range(1, m_t + 1)]
        + [f"LBapprox_q{q}" for q in range(1, m_t + 1)]
        + ["alpha_star", "gamma_star", "condition_ok", "mc_halfwidth"]
    )


def rate_columns(m_t: int) -> list[str]:
    """Rate-valued keys of a row; per-q half-widths are kept in rows but not in the CSV."""
    fixed = [c for c in columns(m_t) if c not in ("B_hz", "alpha_star", "gamma_star", "condition_ok")]
    return fixed + [f"L1_hw_q{q}" for q in range(1, m_t + 1)]


@dataclass
class SweepResult:
    scenario: str
    units: str
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(float(v))


def _refine_u1_peak(sc: Scenario, bs: np.ndarray, u1: np.ndarray) -> tuple[float, float]:
    # U1 is cheap, so its peak is refined beyond the sweep grid in log B
    i = int(np.argmax(u1))
    if i == 0 or i == len(bs) - 1:
        return float(bs[i]), float(u1[i])
    res = minimize_scalar(
        lambda lb_: -upper_bound_u1(sc.sf, sc.grid, sc.spectrum, sc.link, 10**lb_, sc.quadrature).rate,
        bounds=(math.log10(bs[i - 1]), math.log10(bs[i + 1])),
        method="bounded",
        options={"xatol": 1e-6},
    )
    if -res.fun < u1[i]:
        return float(bs[i]), float(u1[i])
    return float(10**res.x), float(-res.fun)


def _summary(sc: Scenario, rows: list, div: float) -> dict:
    bs = np.array([r["B_hz"] for r in rows])
    out = {}
    for name in rate_columns(sc.spectrum.m_t):
        if name == "mc_halfwidth" or name.startswith("L1_hw"):
            continue
        vals = np.array([r[name] for r in rows], dtype=float)
        if np.all(np.isnan(vals)):
            continue
        i = int(np.nanargmax(vals))
        out[name] = {"argmax_B_hz": float(bs[i]), "max": float(vals[i]) / div,
                     "interior": 0 < i < len(bs) - 1}
    b_star, u_star = _refine_u1_peak(sc, bs, np.array([r["U1"] for r in rows]))
    out["U1"].update({"argmax_B_hz_refined": b_star, "max_refined": u_star / div})
    return out


def run_sweep(sc: Scenario, units: str | None = None, workers: int = 1, bandwidths=None) -> SweepResult:
    """Evaluate every curve at each sweep bandwidth; rows are ordered by bandwidth index."""
    units = units or sc.config.units
    div = unit_divisor(units)
    bs = np.asarray(bandwidths, dtype=float) if bandwidths is not None else sc.config.sweep.bandwidths()
    ctx = _context(sc)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda B: _evaluate_point(sc, ctx, float(B)), bs))
    else:
        rows = [_evaluate_point(sc, ctx, float(B)) for B in bs]
    summary = _summary(sc, rows, div)
    rate_cols = rate_columns(sc.spectrum.m_t)
    scaled = [{k: (v / div if k in rate_cols else v) for k, v in r.items()} for r in rows]
    return SweepResult(sc.name, units, columns(sc.spectrum.m_t), scaled, summary)


def check_conditions(sc: Scenario, B: float | None = None) -> dict:
    """Spread and SNR conditions of the upper bound plus the Taylor validity flag."""
    B = float(B) if B is not None else float(sc.config.sweep.B_min)
    cond = sufficient_condition_holds(sc.sf.spread, sc.grid, sc.spectrum, sc.link, B)
    taylor = taylor_coefficient(sc.sf, sc.grid, sc.spectrum, sc.link, sc.quadrature)
    return {
        "scenario": sc.name,
        "B_hz": B,
        "spread": sc.sf.spread,
        "kappa": taylor.kappa,
        "T_s": sc.grid.T,
        "F_hz": sc.grid.F,
        "TF": sc.grid.TF,
        "spread_condition": cond.spread_ok,
        "snr_condition": cond.snr_ok,
        "sufficient_condition": cond.holds,
        "snr_db": 10 * math.log10(cond.snr),
        "snr_threshold_db": cond.snr_threshold_db,
        "taylor_valid": taylor.valid,
        "taylor_beta_threshold": taylor.threshold_beta,
    }


def scaled_spread(sc: Scenario, spread: float) -> Scenario:
    """Same scenario with a brick of the given spread (delay support kept, Doppler scaled)."""
    tau0 = sc.sf.tau0
    sf = BrickScattering(spread / (4 * tau0), tau0)
    grid = GridParams.matched(sf, sc.grid.TF)
    return replace(sc, sf=sf, grid=grid)


def asymptotics_report(sc: Scenario, B_ladder=None, trend_spreads=None) -> dict:
    """Wideband slope, tightness of the upper bound along a ladder, and the lower/upper ratio."""
    taylor = taylor_coefficient(sc.sf, sc.grid, sc.spectrum, sc.link, sc.quadrature)
    ladder = list(B_ladder) if B_ladder is not None else list(np.logspace(10.5, 13, 6))
    gaps = []
    for B in ladder:
        u1 = upper_bound_u1(sc.sf, sc.grid, sc.spectrum, sc.link, B, sc.quadrature).rate
        gaps.append(B * u1 / taylor.c1 - 1)
    abs_gaps = np.abs(gaps)
    ratio = lb_ratio_analysis(sc.sf, sc.grid, sc.spectrum, sc.link, q=sc.quadrature)
    trend = []
    if isinstance(sc.sf, BrickScattering):
        spreads = trend_spreads if trend_spreads is not None else [sc.sf.spread / 10**k for k in range(3)]
        for s in spreads:
            other = scaled_spread(sc, s)
            r = lb_ratio_analysis(other.sf, other.grid, other.spectrum, other.link, q=sc.quadrature)
            trend.append({"spread": s, "kappa": kappa(other.sf), "ratio": r.limit})
    return {
        "scenario": sc.name,
        "c1": taylor.c1,
        "kappa": taylor.kappa,
        "taylor_valid": taylor.valid,
        "taylor_beta_threshold": taylor.threshold_beta,
        "u1_ladder_B_hz": [float(b) for b in ladder],
        "u1_relative_gap": [float(x) for x in gaps],
        "u1_gap_shrinking": bool(np.all(np.diff(abs_gaps) < 0)),
        "lb_ratio": ratio.limit,
        "lb_ratio_ladder": ratio.ratios,
        "lb_ratio_monotone": ratio.monotone,
        "lb_ratio_flags": ratio.flags,
        "kappa_trend": trend,
        "kappa_trend_increasing": bool(all(
            b["ratio"] > a["ratio"] for a, b in zip(trend, trend[1:])
        )) if len(trend) > 1 else None,
    }


def uwb_gain_report(sc: Scenario, B_eval: float) -> dict:
    """Relative gain of the best multi-eigenmode lower bound over a single eigenmode at ``B_eval``."""
    sw = sc.config.sweep
    if not sw.B_min <= B_eval <= sw.B_max:
        raise ValueError(f"B_eval={B_eval:g} Hz outside the sweep range [{sw.B_min:g}, {sw.B_max:g}]")
    if 1 not in sc.q_range:
        raise ValueError("q_range must contain 1 for the gain report")
    ctx = _context(sc)
    per_q = {}
    for q in sc.q_range:
        v = lower_bound_l1_q(ctx, B_eval, q)
        _check_mc(v, f"B={B_eval:g} Hz, q={q}")
        per_q[q] = v
    base = per_q[1]
    u1 = upper_bound_u1(sc.sf, sc.grid, sc.spectrum, sc.link, B_eval, sc.quadrature).rate
    multi = [q for q in sc.q_range if q > 1]
    if multi:
        q_best = max(multi, key=lambda q: per_q[q].rate)
        best = per_q[q_best]
        gain = (best.rate - base.rate) / base.rate
        # linearized propagation, added in absolute value (conservative)
        hw = (best.diagnostics["mc_halfwidth"] + (1 + gain) * base.diagnostics["mc_halfwidth"]) / base.rate
    else:
        q_best, gain, hw = 1, 0.0, 0.0
    return {
        "scenario": sc.name,
        "B_hz": float(B_eval),
        "gain": gain,
        "gain_halfwidth": hw,
        "best_q": q_best,
        "L1": {str(q): v.rate for q, v in per_q.items()},
        "L1_halfwidth": {str(q): v.diagnostics["mc_halfwidth"] for q, v in per_q.items()},
        "U1": u1,
        "headroom": (u1 - base.rate) / base.rate,
    }
