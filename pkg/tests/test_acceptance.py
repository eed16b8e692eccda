"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``CRITERION n: PASS|FAIL`` line (collected and repeated
in the terminal summary).  The three figure sweeps use the desk-scale Monte
Carlo budget (10^4 outer x 512 inner samples, exact Toeplitz up to K = 512)
and are computed once per session.
"""

import math
from functools import lru_cache

import numpy as np
import pytest

from wssus_bounds.asymptotics import lb_ratio_analysis, schur_order_check, taylor_coefficient
from wssus_bounds.channel_model import BrickScattering, GridParams, log_penalty_integral
from wssus_bounds.lower_bound import LowerBoundContext, _l1_terms, lower_bound_l1_q
from wssus_bounds.mi import McSpec
from wssus_bounds.scenario import preset, resolve
from wssus_bounds.spatial import SpatialSpectrum, hadamard_det_inequality_holds
from wssus_bounds.sweep import run_sweep, scaled_spread, uwb_gain_report
from wssus_bounds.upper_bound import LinkBudget, penalty_psi, snr_threshold, upper_bound_u1

from conftest import ACCEPTANCE_LINES, FIG1_P, random_grid


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def sweep(name):
    sc = resolve(preset_name=name)
    assert sc.config.mc.outer == 10_000 and sc.config.mc.inner == 512 and sc.config.exact_k_max == 512
    return run_sweep(sc)


def test_criterion_01_threshold():
    thr = snr_threshold(1e-2, GridParams(1.0, 1.25), 16.0, 1.0)
    db = 10 * math.log10(thr)
    report(1, abs(db - 141.0) <= 1.0, f"threshold {db:.2f} dB (target 141 +- 1)")


def test_criterion_02_brick_penalty_equivalence():
    brick = BrickScattering(50.0, 5e-6)
    grid_form = brick.to_grid()
    worst = 0.0
    for c in 10.0 ** np.arange(-3, 7):
        closed = brick.spread * math.log1p(c / brick.spread)
        worst = max(worst, abs(log_penalty_integral(grid_form, c) - closed) / closed)
    report(2, worst <= 1e-9, f"max relative deviation {worst:.2e} over c = 1e-3..1e6")


def test_criterion_03_worst_case_dominance():
    rng = np.random.default_rng(20240603)
    spec = SpatialSpectrum.uncorrelated(3, 3)
    lb = LinkBudget(FIG1_P)
    spread = 1e-3
    brick = BrickScattering(spread / (4 * 5e-6), 5e-6)
    bs = np.geomspace(1e6, 1e13, 20)
    violations = 0
    for _ in range(200):
        sf = random_grid(rng, spread)
        assert sf.spread == pytest.approx(spread)
        g = GridParams.matched(sf)
        for B in bs:
            if upper_bound_u1(sf, g, spec, lb, B).rate < upper_bound_u1(brick, g, spec, lb, B).rate:
                violations += 1
            if penalty_psi(sf, spec, lb, B, 0) > penalty_psi(brick, spec, lb, B, 0) * (1 + 1e-12):
                violations += 1
    report(3, violations == 0, f"{violations} violations over 200 grids x 20 bandwidths")


def test_criterion_04_bound_ordering():
    worst, count = math.inf, 0
    for name in ("fig1", "fig2", "fig3"):
        res = sweep(name)
        for row in res.rows:
            for q in (1, 2, 3):
                margin = row["U1"] - (row[f"L1_q{q}"] - 3 * row[f"L1_hw_q{q}"])
                worst = min(worst, margin / row["U1"])
                count += 1
    report(4, worst >= 0, f"{count} (preset, q, B) checks, min (U1 - L1 + 3hw)/U1 = {worst:.4f}")


def test_criterion_05_asymptotic_tightness():
    sc = resolve(preset_name="fig1")
    c1 = taylor_coefficient(sc.sf, sc.grid, sc.spectrum, sc.link).c1
    ladder = np.logspace(10.5, 13, 6)
    gaps = [abs(B * upper_bound_u1(sc.sf, sc.grid, sc.spectrum, sc.link, B).rate / c1 - 1) for B in ladder]
    shrinking = all(a > b for a, b in zip(gaps, gaps[1:]))
    report(5, gaps[-1] < 0.01 and shrinking, f"gap at 1e13 Hz {gaps[-1]:.4%}, shrinking={shrinking}")


def test_criterion_06_ratio():
    sc = resolve(preset_name="fig1")
    limits = []
    for spread in (1e-3, 1e-4, 1e-5):
        other = scaled_spread(sc, spread)
        limits.append(lb_ratio_analysis(other.sf, other.grid, other.spectrum, other.link).limit)
    increasing = limits[0] < limits[1] < limits[2] <= 1
    ok = abs(limits[0] - 0.998) <= 0.003 and increasing
    report(6, ok, f"ratio {limits[0]:.5f} (0.998 +- 0.003); kappa trend {[round(x, 6) for x in limits]}")


def _psd(rng, n, rank):
    x = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    m = x @ x.conj().T / rank
    return (m + m.conj().T) / 2


def test_criterion_07_determinant_lemma():
    rng = np.random.default_rng(7)
    violations = zero_diag = 0
    for i in range(10_000):
        n = int(rng.integers(1, 9))
        a = _psd(rng, n, int(rng.integers(1, n + 1)))
        b = _psd(rng, n, int(rng.integers(1, n + 1)))
        if i % 4 == 0 and n > 1:
            k = int(rng.integers(1, n))
            idx = rng.choice(n, size=k, replace=False)
            a[idx, :] = 0
            a[:, idx] = 0
            zero_diag += 1
        if not hadamard_det_inequality_holds(a, b).holds:
            violations += 1
    report(7, violations == 0, f"{violations} violations in 10^4 pairs ({zero_diag} with zero diagonals)")


def _flatten(rng, v):
    # a doubly stochastic image of v, renormalized, is majorized by v
    n = len(v)
    w = rng.dirichlet(np.ones(3))
    out = sum(wi * v[rng.permutation(n)] for wi in w)
    return np.sort(out)[::-1] * n / out.sum()


def _spectrum_vec(rng, n):
    v = np.sort(rng.gamma(0.7, size=n))[::-1]
    return v * n / v.sum()


def test_criterion_08_schur_and_beamforming():
    rng = np.random.default_rng(8)
    brick = BrickScattering(50.0, 5e-6)
    g = GridParams.matched(brick)
    lb = LinkBudget(FIG1_P)
    bad = 0
    for i in range(1000):
        n_t, n_r = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        tx, rx = _spectrum_vec(rng, n_t), _spectrum_vec(rng, n_r)
        mode = i % 3  # transmit only, receive only, both
        tx_b = _flatten(rng, tx) if mode != 1 else tx
        rx_b = _flatten(rng, rx) if mode != 0 else rx
        r = schur_order_check(SpatialSpectrum(tx, rx), SpatialSpectrum(tx_b, rx_b), brick, g, lb)
        if r.verdict not in ("a>=b", "equal") or not r.consistent:
            bad += 1
    exact = 0
    for _ in range(100):
        n_t = int(rng.integers(3, 7))
        tx = _spectrum_vec(rng, n_t)
        rest = tx[1:].sum()
        new_rest = np.sort(rng.dirichlet(np.ones(n_t - 1)) * rest)[::-1]
        new_rest = np.minimum(new_rest, tx[0])
        new_rest = new_rest * rest / new_rest.sum()
        if new_rest.max() > tx[0]:
            continue
        tx_b = np.concatenate([[tx[0]], new_rest])
        tx_b[-1] = n_t - tx_b[:-1].sum()
        if tx_b[-1] < 0 or np.any(np.diff(tx_b) > 0):
            continue
        rx = _spectrum_vec(rng, 3)
        a, b = SpatialSpectrum(tx, rx), SpatialSpectrum(tx_b, rx)
        same = taylor_coefficient(brick, g, a, lb).c1 == taylor_coefficient(brick, g, b, lb).c1
        for B in (1e7, 1e10):
            same &= upper_bound_u1(brick, g, a, lb, B).rate == upper_bound_u1(brick, g, b, lb, B).rate
        exact += 0 if same else 1
    report(8, bad == 0 and exact == 0, f"{bad} Schur violations in 10^3 pairs, {exact} non-zero perturbation changes")


def test_criterion_09_figure_properties():
    f1, f2, f3 = sweep("fig1"), sweep("fig2"), sweep("fig3")
    u1, u2 = f1.summary["U1"], f2.summary["U1"]
    shift = u2["argmax_B_hz_refined"] > u1["argmax_B_hz_refined"] and u2["max_refined"] < u1["max_refined"]
    bs = f1.column("B_hz")
    large = bs >= 1e11
    l1_f1, l1_f3 = f1.column("L1_q1"), f3.column("L1_q1")
    tx_gain = bool(np.all(l1_f3[large] > l1_f1[large]))
    peak = f1.summary["L1_q1"]["argmax_B_hz"]
    above = bs > peak
    single = bool(np.all(f1.column("L1_q1")[above] >= f1.column("L1_q3")[above]))
    detail = (
        f"U1 peak fig1 {u1['argmax_B_hz_refined']:.3g} Hz/{u1['max_refined']:.4g}, "
        f"fig2 {u2['argmax_B_hz_refined']:.3g} Hz/{u2['max_refined']:.4g}; "
        f"fig3>fig1 at B>=1e11: {tx_gain}; fig1 L1(1)>=L1(3) above {peak:.3g} Hz: {single}"
    )
    report(9, shift and tx_gain and single, detail)


def test_criterion_10_uwb_gain():
    sc = resolve(preset_name="fig1")
    rep = uwb_gain_report(sc, 7e9)
    ok = rep["gain"] <= 0.07 + 2 * rep["gain_halfwidth"]
    report(
        10, ok,
        f"gain {rep['gain']:+.4f} +- {rep['gain_halfwidth']:.4f} (best q={rep['best_q']}), "
        f"headroom (U1-L1(1))/L1(1) {rep['headroom']:.4f}",
    )


def test_uwb_smaller_spread_leaves_less_room():
    # both gains are negative here, so the trend is checked on the room above L1(1)
    sc = resolve(preset_name="fig1")
    wide = uwb_gain_report(sc, 7e9)
    narrow = uwb_gain_report(scaled_spread(sc, 1e-4), 7e9)
    assert narrow["headroom"] < wide["headroom"]
    assert narrow["gain"] <= 0.07 + 2 * narrow["gain_halfwidth"]


def test_gamma_golden_section_vs_grid_scan():
    # the gamma objective has no proven structure; golden-section is checked against an 11-point scan
    sc = resolve(preset_name="fig1")
    lb = LinkBudget(FIG1_P, 3.0)
    ctx = LowerBoundContext(sc.sf, sc.grid, sc.spectrum, lb, McSpec(outer=2000, inner=128, seed=0))
    worst = 0.0
    for B in (1e8, 1e9, 1e10, 1e11):
        for q in (1, 2, 3):
            v = lower_bound_l1_q(ctx, B, q)
            scan = max(_l1_terms(ctx, B, q, gm)[0] - _l1_terms(ctx, B, q, gm)[1] for gm in np.linspace(1, 3, 11))
            worst = max(worst, (scan - v.rate) / abs(scan))
    assert worst <= 1e-6, f"golden-section below grid scan by {worst:.2e}"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
