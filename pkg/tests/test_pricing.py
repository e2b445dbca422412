import dataclasses
import math

import numpy as np
import pytest

from rnddpm import gbm_paths, price_asian_arithmetic, price_european, price_strip
from rnddpm.diagnostics import martingale_curve


@pytest.fixture(scope="module")
def q_paths(baseline_params):
    return gbm_paths(baseline_params, "Q", 40_000, seed=77)


def test_zero_strike_call_is_discounted_forward(q_paths, baseline_params):
    est = price_european(q_paths, K=1e-12, r=baseline_params.r, dt=baseline_params.dt)
    curve = martingale_curve(q_paths, baseline_params.r, dt=baseline_params.dt)
    assert est.value == pytest.approx(curve[-1, 1], rel=1e-9)
    assert abs(est.value - 100.0) < 3 * est.std_error


def test_atm_matches_black_scholes(q_paths, baseline_params):
    from rnddpm import bs_call_price

    est = price_european(q_paths, 100.0, baseline_params.r, dt=baseline_params.dt)
    bs = bs_call_price(100.0, 100.0, baseline_params.r, 0.2, baseline_params.maturity)
    assert abs(est.value - bs) < 3 * est.std_error


def test_prices_decrease_in_strike(q_paths, baseline_params):
    strikes = [80.0, 90.0, 100.0, 110.0, 120.0]
    vals = [price_european(q_paths, K, baseline_params.r, dt=baseline_params.dt).value
            for K in strikes]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_prices_convex_in_strike(q_paths, baseline_params):
    """Pathwise convexity of the payoff survives averaging exactly."""
    strikes = np.linspace(70.0, 130.0, 13)
    vals = np.array([price_european(q_paths, K, baseline_params.r, dt=baseline_params.dt).value
                     for K in strikes])
    second_diff = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    assert np.all(second_diff > -1e-10)


def test_asian_single_step_equals_european(baseline_params):
    params = dataclasses.replace(baseline_params, horizon=1)
    paths = gbm_paths(params, "Q", 5000, seed=3)
    eur = price_european(paths, 100.0, params.r, dt=params.dt)
    asi = price_asian_arithmetic(paths, 100.0, params.r, dt=params.dt)
    assert asi.value == pytest.approx(eur.value, rel=1e-12)
    assert asi.std_error == pytest.approx(eur.std_error, rel=1e-12)


def test_asian_average_excludes_start(q_paths, baseline_params):
    expected_avg = q_paths.prices[:, 1:].mean(axis=1)
    payoff = np.maximum(expected_avg - 100.0, 0.0)
    disc = math.exp(-baseline_params.r * baseline_params.maturity)
    est = price_asian_arithmetic(q_paths, 100.0, baseline_params.r, dt=baseline_params.dt)
    assert est.value == pytest.approx(disc * payoff.mean(), rel=1e-12)


def test_asian_below_european(q_paths, baseline_params):
    eur = price_european(q_paths, 100.0, baseline_params.r, dt=baseline_params.dt)
    asi = price_asian_arithmetic(q_paths, 100.0, baseline_params.r, dt=baseline_params.dt)
    combined = math.hypot(eur.std_error, asi.std_error)
    assert asi.value < eur.value + 3 * combined


def test_std_error_scales_with_paths(baseline_params):
    small = gbm_paths(baseline_params, "Q", 4000, seed=8)
    large = gbm_paths(baseline_params, "Q", 16_000, seed=8)
    se_small = price_european(small, 100.0, baseline_params.r, dt=baseline_params.dt).std_error
    se_large = price_european(large, 100.0, baseline_params.r, dt=baseline_params.dt).std_error
    assert se_small / se_large == pytest.approx(2.0, rel=0.15)


def test_strip_vols_and_nan_propagation(q_paths, baseline_params):
    rows = price_strip(q_paths, [1e-9, 95.0, 100.0, 105.0], baseline_params.r,
                       dt=baseline_params.dt)
    assert [row[0] for row in rows] == [1e-9, 95.0, 100.0, 105.0]
    # A near-zero strike is outside the invertible band: NaN, not an error.
    assert math.isnan(rows[0][2])
    for _, est, vol in rows[1:]:
        assert est.value > 0
        assert vol == pytest.approx(0.2, abs=0.02)


def test_estimate_metadata(q_paths, baseline_params):
    est = price_european(q_paths, 100.0, baseline_params.r, dt=baseline_params.dt)
    assert est.n_paths == 40_000
    assert est.discount == pytest.approx(
        math.exp(-baseline_params.r * baseline_params.maturity), rel=1e-12)
    assert est.spec.strike == 100.0
    assert est.spec.maturity_steps == 21
