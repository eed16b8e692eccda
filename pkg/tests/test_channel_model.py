import math

import numpy as np
import pytest

from wssus_bounds.channel_model import (
    BrickScattering,
    GridParams,
    SampledScattering,
    kappa,
    log_penalty_integral,
    spectral_density,
    volume,
)
from wssus_bounds.quadrature import QuadratureError, QuadratureSpec, axis_nodes, integrate_cells


def test_matched_grid_values(brick, grid):
    assert grid.TF == pytest.approx(1.25)
    assert grid.T == pytest.approx(3.5355339059327e-4, rel=1e-12)
    assert grid.F == pytest.approx(3535.5339059327, rel=1e-12)
    assert brick.nu0 * grid.T == pytest.approx(brick.tau0 * grid.F)


def test_spectral_density_brick_center(brick, grid):
    assert spectral_density(brick, grid, 0.0, 0.0) == pytest.approx(800.0)


def test_spectral_density_off_band(brick, grid):
    theta = 1.5 * brick.nu0 * grid.T
    assert spectral_density(brick, grid, theta, 0.0) == 0.0


def test_spectral_density_rejects_unnormalized_arguments(brick, grid):
    with pytest.raises(ValueError):
        spectral_density(brick, grid, 0.6, 0.0)


def test_sampled_density_integrates_to_one(grid):
    rng = np.random.default_rng(3)
    sf = SampledScattering(np.linspace(-50, 50, 7), np.linspace(-5e-6, 5e-6, 4), rng.uniform(0, 1, (7, 4)))
    # change of variables theta = nu T, phi = tau F
    th_e, ph_e = sf.nu_axis * grid.T, sf.tau_axis * grid.F
    res = integrate_cells(lambda x, y: spectral_density(sf, grid, x[:, None], y[None, :]), th_e, ph_e)
    assert res.value == pytest.approx(1.0, rel=1e-10)
    assert volume(sf) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("nu0, tau0, expected", [(50.0, 5e-6, 1000.0), (500.0, 5e-6, 100.0)])
def test_kappa_brick(nu0, tau0, expected):
    assert kappa(BrickScattering(nu0, tau0)) == pytest.approx(expected, rel=1e-12)


def _bilinear_kappa_oracle(nu, tau, vals):
    # exact integral of the squared bilinear interpolant: per cell v^T (M x M) v * area
    m = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
    total = 0.0
    for i in range(len(nu) - 1):
        for j in range(len(tau) - 1):
            corner = vals[i : i + 2, j : j + 2]
            total += (nu[i + 1] - nu[i]) * (tau[j + 1] - tau[j]) * np.sum(m @ corner @ m * corner)
    return total


def test_kappa_two_level_grid_matches_piecewise_oracle():
    nu = np.array([-50.0, -20.0, 20.0, 50.0])
    tau = np.array([-5e-6, -2e-6, 2e-6, 5e-6])
    a, b = 3.0, 1.0
    vals = np.full((4, 4), b)
    vals[1:3, 1:3] = a
    sf = SampledScattering(nu, tau, vals)
    oracle = _bilinear_kappa_oracle(nu, tau, sf.values)
    assert kappa(sf) == pytest.approx(oracle, rel=1e-10)
    # frozen value of the same oracle
    assert kappa(sf) == pytest.approx(1122.334455667789, rel=1e-9)


def test_kappa_two_level_step_limit():
    # sharpening the step drives the bilinear kappa to the piecewise-constant a^2 A + b^2 B
    a_val, b_val, inner, outer = 3.0, 1.0, 0.4, 1.0
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        x = np.array([-outer, -inner - eps, -inner, inner, inner + eps, outer])
        prof = np.array([b_val, b_val, a_val, a_val, b_val, b_val])
        vals = np.outer(np.ones(6), prof)
        vals = np.where(np.outer(np.abs(x) <= inner, np.abs(x) <= inner), a_val, b_val)
        sf = SampledScattering(x * 50.0, x * 5e-6, vals)
        area_a = (2 * inner * 50.0) * (2 * inner * 5e-6)
        area = (2 * outer * 50.0) * (2 * outer * 5e-6)
        mass = a_val * area_a + b_val * (area - area_a)
        closed = (a_val**2 * area_a + b_val**2 * (area - area_a)) / mass**2
        errs.append(abs(kappa(sf) - closed) / closed)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_log_penalty_zero_scale(brick):
    assert log_penalty_integral(brick, 0.0) == 0.0


def test_log_penalty_brick_value(brick):
    assert log_penalty_integral(brick, 1.0) == pytest.approx(6.908754779315221e-3, rel=1e-12)


def test_log_penalty_rejects_negative(brick):
    with pytest.raises(ValueError):
        log_penalty_integral(brick, -1.0)


def test_log_penalty_grid_vs_riemann_reference():
    rng = np.random.default_rng(11)
    nu = np.linspace(-40, 40, 5)
    tau = np.linspace(-4e-6, 4e-6, 6)
    sf = SampledScattering(nu, tau, rng.uniform(0.2, 2.0, (5, 6)))
    c = 2e-3
    # brute-force composite midpoint reference, 1600 x 1600 nodes
    n = 1600
    x = -40 + (np.arange(n) + 0.5) * 80 / n
    y = -4e-6 + (np.arange(n) + 0.5) * 8e-6 / n
    ref = np.log1p(c * sf.evaluate_tensor(x, y)).sum() * (80 / n) * (8e-6 / n)
    assert log_penalty_integral(sf, c) == pytest.approx(ref, rel=1e-6)


def test_brick_as_grid_matches_closed_form(brick):
    g = brick.to_grid()
    for c in (1e-3, 1.0, 1e6):
        assert log_penalty_integral(g, c) == pytest.approx(log_penalty_integral(brick, c), rel=1e-9)


def test_sampled_is_normalized_and_scaled():
    sf = SampledScattering(np.array([-1.0, 1.0]), np.array([-1e-3, 1e-3]), np.full((2, 2), 5.0))
    assert sf.scale == pytest.approx(1 / (5.0 * 2 * 2e-3))
    assert np.allclose(sf.values, 1 / (2 * 2e-3))


def test_sampled_zero_outside_lattice():
    sf = SampledScattering(np.array([-1.0, 1.0]), np.array([-1e-3, 1e-3]), np.ones((2, 2)))
    assert sf.evaluate(2.0, 0.0) == 0.0
    assert sf.evaluate(0.0, 0.0) > 0


@pytest.mark.parametrize(
    "nu, tau, vals",
    [
        (np.array([0.0, 1.0]), np.array([0.0, 1.0]), -np.ones((2, 2))),
        (np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.zeros((2, 2))),
        (np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.ones((2, 2))),
        (np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.ones((3, 2))),
    ],
)
def test_sampled_invalid(nu, tau, vals):
    with pytest.raises(ValueError):
        SampledScattering(nu, tau, vals)


def test_not_underspread_rejected():
    with pytest.raises(ValueError):
        BrickScattering(1e5, 5e-6)


def test_grid_invariants(brick):
    with pytest.raises(ValueError):
        GridParams(1e-4, 1e3)  # TF < 1
    with pytest.raises(ValueError):
        GridParams(1e-1, 1e2).check_no_aliasing(brick)  # T > 1/(2 nu0)
    with pytest.raises(ValueError):
        GridParams(1e-4, 2e5).check_no_aliasing(brick)  # F > 1/(2 tau0)


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    sf = SampledScattering(np.linspace(-30, 30, 4), np.linspace(-2e-6, 2e-6, 3), rng.uniform(0, 1, (4, 3)))
    path = tmp_path / "sf.csv"
    sf.to_csv(path)
    back = SampledScattering.from_csv(path)
    assert np.allclose(back.values, sf.values, rtol=1e-14)
    assert np.array_equal(back.nu_axis, sf.nu_axis)


def test_csv_rejects_non_rectangular(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("nu_hz,tau_s,value\n0,0,1\n1,0,1\n0,1e-6,1\n")
    with pytest.raises(ValueError):
        SampledScattering.from_csv(path)


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("nu,tau,v\n0,0,1\n")
    with pytest.raises(ValueError):
        SampledScattering.from_csv(path)


def test_quadrature_exact_for_polynomials():
    res = integrate_cells(lambda x, y: np.outer(x**3, y**2), [0, 1, 2], [0, 1])
    assert res.value == pytest.approx(4.0 / 3.0, rel=1e-13)


def test_quadrature_raises_when_not_converged():
    spec = QuadratureSpec(nodes_per_axis=8, rule="midpoint", tolerance=1e-15, max_refinements=1)
    with pytest.raises(QuadratureError) as info:
        integrate_cells(lambda x, y: np.outer(np.sqrt(np.abs(x)), np.ones_like(y)), [-1, 1], [0, 1], spec)
    assert info.value.error_estimate > 0


def test_axis_nodes_weights_sum_to_length():
    nodes, w = axis_nodes([0.0, 1.0, 3.0], 8, "gauss-legendre", 2)
    assert w.sum() == pytest.approx(3.0)
    assert nodes.min() > 0 and nodes.max() < 3


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(nodes_per_axis=4)
    with pytest.raises(ValueError):
        QuadratureSpec(rule="simpson")
