import json
import math

import numpy as np
import pytest

from wssus_bounds.scenario import ConfigError, ScenarioConfig, build_scenario, preset, resolve
from wssus_bounds.sweep import (
    LN2,
    asymptotics_report,
    check_conditions,
    columns,
    run_sweep,
    scaled_spread,
    uwb_gain_report,
)


def small(name="fig1", **extra):
    cfg = preset(name).model_dump()
    cfg["mc"].update(outer=600, inner=32, seed=3)
    cfg["sweep"].update(B_min=1e7, B_max=1e12, points=4)
    cfg.update(extra)
    return resolve(cfg)


def test_presets():
    assert preset("fig2").spatial.rx_eigs == [2.6, 0.3, 0.1]
    assert preset("fig3").spatial.tx_eigs == [1.7, 1.0, 0.3]
    sc = build_scenario(preset("fig1"))
    assert sc.sf.spread == pytest.approx(1e-3) and sc.link.P == 1.26e8 and sc.q_range == [1, 2, 3]
    assert len(sc.config.sweep.bandwidths()) == 40
    with pytest.raises(KeyError):
        preset("fig4")


def test_degenerate_sweep_rejected():
    cfg = preset("fig1").model_dump()
    cfg["sweep"].update(B_min=1e8, B_max=1e8, points=2)
    with pytest.raises(ConfigError):
        resolve(cfg)


def test_sweep_below_one_slot_rejected():
    cfg = preset("fig1").model_dump()
    cfg["sweep"]["B_min"] = 100.0
    with pytest.raises(ConfigError):
        resolve(cfg)


def test_config_invariants():
    base = preset("fig1").model_dump()
    for patch in (
        {"q_range": [0]},
        {"q_range": [1, 1]},
        {"spatial": {"tx_eigs": [2, 2, 2], "rx_eigs": [1, 1, 1]}},
        {"spatial": {"tx_eigs": [1, 1, 1]}},
        {"link": {"P": -1}},
        {"grid": {"kind": "explicit", "T_s": 1e-3}},
        {"scattering": {"kind": "grid"}},
        {"unknown": 1},
    ):
        with pytest.raises(ConfigError):
            resolve({**base, **patch})


def test_matrix_and_csv_inputs(tmp_path):
    from wssus_bounds.channel_model import SampledScattering

    sf = SampledScattering(np.linspace(-50, 50, 4), np.linspace(-5e-6, 5e-6, 3), np.ones((4, 3)))
    sf.to_csv(tmp_path / "sf.csv")
    cfg = {
        "scattering": {"kind": "grid", "csv": "sf.csv"},
        "spatial": {"tx_matrix": {"re": np.eye(2).tolist()}, "rx_matrix": {"re": [[1, 0.5], [0.5, 1]]}},
        "link": {"P": 1e8},
    }
    sc = resolve(cfg, base_dir=tmp_path)
    assert np.allclose(sc.spectrum.rx_eigs, [1.5, 0.5])
    assert sc.sf.spread == pytest.approx(1e-3)


def test_overrides():
    sc = resolve(preset_name="fig2", seed=42, units="bits")
    assert sc.config.mc.seed == 42 and sc.config.units == "bits"
    with pytest.raises(ConfigError):
        resolve(preset_name="fig2", seed=-1)
    with pytest.raises(ConfigError):
        resolve()


def test_sweep_columns_and_ordering():
    res = run_sweep(small())
    assert res.columns == columns(3)
    bs = res.column("B_hz")
    assert np.all(np.diff(bs) > 0)
    assert np.all(res.column("U1") + 3 * res.column("mc_halfwidth") >= res.column("L1_q1"))
    assert set(res.summary) >= {"U1", "Ucoh", "L1_q1", "LBapprox_q3"}


def test_sweep_is_byte_identical_across_runs_and_workers():
    a = run_sweep(small()).to_csv()
    b = run_sweep(small(), workers=3).to_csv()
    assert a == b


def test_bits_are_nats_over_ln2():
    nats = run_sweep(small())
    bits = run_sweep(small(), units="bits")
    for col in ("U1", "Ucoh", "L1_q2", "LBapprox_q1", "mc_halfwidth"):
        assert np.array_equal(bits.column(col), nats.column(col) / LN2)
    assert np.array_equal(bits.column("gamma_star"), nats.column("gamma_star"))


def test_restricted_q_range_leaves_nan_columns():
    res = run_sweep(small(q_range=[1]))
    assert np.all(np.isnan(res.column("L1_q3")))
    assert "nan" in res.to_csv()


def test_refined_u1_peak_is_at_least_grid_peak():
    res = run_sweep(small())
    u = res.summary["U1"]
    assert u["max_refined"] >= u["max"]


def test_check_conditions_fig1_all_true():
    rep = check_conditions(resolve(preset_name="fig1"))
    assert rep["spread_condition"] and rep["snr_condition"] and rep["taylor_valid"]
    assert rep["kappa"] == pytest.approx(1000) and rep["spread"] == pytest.approx(1e-3)


def test_check_conditions_taylor_false():
    # large spread brick with kappa = 1/spread below 2 TF / beta
    cfg = preset("fig1").model_dump()
    cfg["scattering"] = {"kind": "brick", "nu0_hz": 5e4, "tau0_s": 4e-6}  # spread 0.8, kappa 1.25
    cfg["grid"] = {"kind": "matched", "tf": 1.25}
    cfg["sweep"]["B_min"] = 1e6
    rep = check_conditions(resolve(cfg))
    assert not rep["taylor_valid"]


def test_asymptotics_report_fig1():
    rep = asymptotics_report(resolve(preset_name="fig1"))
    assert abs(rep["u1_relative_gap"][-1]) < 0.01 and rep["u1_gap_shrinking"]
    assert rep["lb_ratio"] == pytest.approx(0.998, abs=0.003)
    assert rep["kappa_trend_increasing"]


def test_uwb_single_q_gives_zero():
    rep = uwb_gain_report(small(q_range=[1]), 7e9)
    assert rep["gain"] == 0.0 and rep["best_q"] == 1


def test_uwb_outside_range_rejected():
    with pytest.raises(ValueError):
        uwb_gain_report(small(), 1e13)


def test_scaled_spread():
    sc = scaled_spread(resolve(preset_name="fig1"), 1e-4)
    assert sc.sf.spread == pytest.approx(1e-4)
    assert sc.grid.TF == pytest.approx(1.25)
