import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gibbs_boundary.datagen import ELLIPSE, Dataset, generate, preset_scenario
from gibbs_boundary.errors import (
    DegenerateDataError, DegenerateRegionError, NoGapError, ThresholdOutsideDataError,
)
from gibbs_boundary.geometry import ConstantCurve, EllipseShape, symm_diff_area
from gibbs_boundary.loss import LossSpec, Verdict, check_scaling_assumption, empirical_risk, CdfPair
from gibbs_boundary.oracle import closed_form_ck, grid_count_area
from gibbs_boundary.scaling import (
    child_seeds, estimate_ckz, estimate_f, fit_point_estimate, ratio_ck, solve_ck, z_grid,
)


def _ordered(c, k):
    return (math.expm1(k) / (math.exp(k) - math.exp(-c)) > k / (k + c) > math.expm1(k) / math.expm1(c + k))


# thresholds -------------------------------------------------------------------

def test_z_grid_normal_quantiles(rng):
    y = rng.standard_normal(20_000)
    grid = z_grid(y, 19)
    assert grid.size == 19
    from scipy.stats import norm

    expected = norm.ppf(np.arange(1, 20) / 20)
    assert np.max(np.abs(grid - expected)) < 0.05
    assert np.all(np.diff(grid) > 0)


def test_z_grid_small_data():
    grid = z_grid(np.array([0.0, 1.0, 2.0, 3.0]), 2)
    assert grid.size == 2
    np.testing.assert_allclose(grid, [1.0, 2.0])


def test_z_grid_errors():
    with pytest.raises(DegenerateDataError):
        z_grid(np.full(10, 3.0))
    with pytest.raises(ValueError):
        z_grid(np.arange(10.0), 1)


def test_z_grid_deduplicates():
    y = np.array([0.0] * 50 + [1.0] * 50)
    assert np.all(np.diff(z_grid(y, 19)) > 0)


def test_ratio_ck_examples():
    assert ratio_ck(np.array([0.0, 1.0]), 0.5) == (0.5, 0.5)
    assert ratio_ck(np.arange(4.0), 0.5) == (0.75, 0.25)
    with pytest.raises(ThresholdOutsideDataError):
        ratio_ck(np.arange(4.0), -1.0)
    with pytest.raises(ThresholdOutsideDataError):
        ratio_ck(np.arange(4.0), 3.0)


# point estimate ---------------------------------------------------------------

def test_point_estimate_noiseless_circle(circle_data):
    spec = LossSpec(0.5, 0.5, 0.0)
    curve = fit_point_estimate(circle_data, spec, budget=5000, seed=1)
    assert empirical_risk(circle_data, curve, spec) == 0.0


@pytest.fixture(scope="module")
def c1_data():
    return generate(preset_scenario("C1"), 11)


def test_point_estimate_c1(c1_data):
    truth = preset_scenario("C1").truth()
    spec = LossSpec(*ratio_ck(c1_data.y, 2.40), 2.40)
    curve = fit_point_estimate(c1_data, spec, seed=3)
    err = symm_diff_area(curve, truth)
    assert err <= 0.05
    assert abs(grid_count_area(curve, truth) - err) < 2e-3


def test_point_estimate_deterministic(c1_data):
    spec = LossSpec(0.5, 0.5, 2.40)
    a = fit_point_estimate(c1_data, spec, budget=3000, seed=9)
    b = fit_point_estimate(c1_data, spec, budget=3000, seed=9)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    np.testing.assert_array_equal(a.knots.free, b.knots.free)


def test_child_seeds_do_not_mutate():
    root = np.random.SeedSequence(4)
    first = [s.generate_state(2).tolist() for s in child_seeds(root, 3)]
    second = [s.generate_state(2).tolist() for s in child_seeds(root, 3)]
    assert first == second
    assert len({tuple(v) for v in first}) == 3


# CDF estimates ----------------------------------------------------------------

def test_estimate_f_hand_count():
    x = np.array([[0.0, 0.01], [0.02, 0.0], [-0.03, 0.0], [0.4, 0.0], [0.0, -0.4], [-0.35, 0.35]])
    y = np.array([0.0, 1.0, 2.0, 0.5, 3.0, 4.0])
    cdf = estimate_f(Dataset(x, y), ConstantCurve(0.1), 1.0, min_fraction=0.0)
    # inside y = 0, 1, 2 -> two of three <= 1; outside 0.5, 3, 4 -> one of three
    assert cdf.f_in == pytest.approx(2 / 3)
    assert cdf.f_out == pytest.approx(1 / 3)


def test_estimate_f_all_inside_low(circle_data):
    y = np.where(circle_data.y > 0, -5.0, 5.0)
    cdf = estimate_f(Dataset(circle_data.x, y), ConstantCurve(0.25), 0.0)
    assert cdf.f_in == 1.0
    assert cdf.f_out == 0.0


def test_estimate_f_degenerate_region(circle_data):
    with pytest.raises(DegenerateRegionError):
        estimate_f(circle_data, ConstantCurve(1e-4), 0.0)
    with pytest.raises(DegenerateRegionError):
        estimate_f(circle_data, ConstantCurve(0.8), 0.0)


def test_estimate_f_fitted_region_overestimates_inside_cdf():
    """Over 20 replicates the fitted region inflates the inside proportion,
    paired against the same data's proportion over the true region."""
    scenario = preset_scenario("C1")
    truth = scenario.truth()
    z = 2.40
    diffs = []
    for seed in range(20):
        data = generate(scenario, 100 + seed)
        spec = LossSpec(*ratio_ck(data.y, z), z)
        curve = fit_point_estimate(data, spec, budget=5000, seed=seed, restarts=1)
        diffs.append(estimate_f(data, curve, z).f_in - estimate_f(data, truth, z).f_in)
    assert np.mean(diffs) > 0


def test_estimate_f_mixing_pulls_cdfs_together():
    """A misplaced region mixes the two populations: over 20 replicates the
    inside proportion rises and the outside proportion falls."""
    scenario = preset_scenario("C1")
    truth = scenario.truth()
    shifted = EllipseShape(
        center=(ELLIPSE.center[0] + 0.03, ELLIPSE.center[1] - 0.02), rotation=ELLIPSE.rotation,
        semi_axis_major=ELLIPSE.semi_axis_major, semi_axis_minor=ELLIPSE.semi_axis_minor,
    ).curve()
    z = 2.40
    d_in, d_out = [], []
    for seed in range(20):
        data = generate(scenario, 100 + seed)
        mixed, exact = estimate_f(data, shifted, z), estimate_f(data, truth, z)
        d_in.append(mixed.f_in - exact.f_in)
        d_out.append(mixed.f_out - exact.f_out)
    assert np.mean(d_in) > 0
    assert np.mean(d_out) < 0


# solver ---------------------------------------------------------------------

def test_solve_ck_c1_optimum():
    c, k = solve_ck(0.1431, 0.9192)
    assert c == pytest.approx(1.86, abs=0.01)
    assert k == pytest.approx(2.36, abs=0.01)


def test_solve_ck_errors():
    with pytest.raises(NoGapError):
        solve_ck(0.4, 0.4)
    with pytest.raises(NoGapError):
        solve_ck(0.6, 0.4)
    with pytest.raises(ValueError):
        solve_ck(0.0, 0.5)
    with pytest.raises(ValueError):
        solve_ck(0.5, 1.0)


def test_solve_ck_vanishing_gap():
    gaps = [0.4, 0.2, 0.1, 0.05, 0.02, 0.01]
    pairs = [solve_ck(0.5 - g / 2, 0.5 + g / 2) for g in gaps]
    cs, ks = np.array(pairs).T
    assert np.all(np.diff(cs) < 0) and np.all(np.diff(ks) < 0)
    assert cs[-1] < 0.05 and ks[-1] < 0.05


@given(st.floats(0.02, 0.9), st.floats(0.05, 0.95))
def test_solve_ck_matches_closed_form(a, frac):
    b = a + frac * (1.0 - a)
    if b - a < 1e-3 or b > 0.99:
        return
    c, k = solve_ck(a, b)
    c0, k0 = closed_form_ck(a, b)
    assert c == pytest.approx(c0, rel=1e-6)
    assert k == pytest.approx(k0, rel=1e-6)
    assert check_scaling_assumption(LossSpec(c, k, 0.0), CdfPair(a, b)) is Verdict.BOUNDARY
    assert _ordered(c, k)


# full procedure -------------------------------------------------------------

@pytest.fixture(scope="module")
def c1_report(c1_data):
    return estimate_ckz(c1_data, seed=5)


def test_estimate_ckz_c1(c1_report, c1_data):
    chosen = c1_report.chosen
    assert c1_data.y.min() <= chosen.z <= c1_data.y.max()
    assert chosen.c > 0 and chosen.k > 0
    ok = [r for r in c1_report.records if r.error is None]
    assert c1_report.records[c1_report.chosen_index].gap == max(r.gap for r in ok)
    assert abs(chosen.z - 2.43) < 0.5
    for rec in ok:
        assert _ordered(rec.c, rec.k)
    assert _ordered(chosen.c, chosen.k)


def test_estimate_ckz_report_dict(c1_report):
    out = c1_report.to_dict()
    assert {"c", "k", "z", "grid", "point_estimate", "chosen_index"} <= set(out)
    assert len(out["grid"]) == len(c1_report.records)


def test_estimate_ckz_binary_uses_zero():
    data = generate(preset_scenario("B1"), 3)
    report = estimate_ckz(data, budget=5000, restarts=1, seed=0)
    assert len(report.records) == 1
    assert report.chosen.z == 0.0
    assert report.meta["binary"] is True
