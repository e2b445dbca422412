import dataclasses
import math

import numpy as np
import pytest

from rnddpm import (
    PHYSICAL,
    OraclePredictor,
    SamplerConfig,
    build_paths,
    build_schedule,
    ddpm_paths,
    reverse_sample,
    risk_neutral_config,
)
from rnddpm.diagnostics import ks_gaussian


def oracle_for(params, sched):
    return OraclePredictor(sched, mean=0.0, var=1.0,
                           norm_shift=params.m_p,
                           norm_scale=math.sqrt(params.v0))


def test_zero_gap_modes_bitwise_identical(baseline_params, default_schedule):
    """With mu = r the shift vanishes and both modes walk the same chain."""
    params = dataclasses.replace(baseline_params, mu=baseline_params.r)
    pred = oracle_for(params, default_schedule)
    rn = risk_neutral_config(pred, params)
    assert not rn.shift.delta.any()
    phys = SamplerConfig(mode=PHYSICAL, predictor=pred)
    a = reverse_sample(rn, default_schedule, 2000, seed=3)
    b = reverse_sample(phys, default_schedule, 2000, seed=3)
    np.testing.assert_array_equal(a, b)


def test_seed_determinism(baseline_params, default_schedule):
    pred = oracle_for(baseline_params, default_schedule)
    cfg = risk_neutral_config(pred, baseline_params)
    a = reverse_sample(cfg, default_schedule, 500, seed=12)
    b = reverse_sample(cfg, default_schedule, 500, seed=12)
    np.testing.assert_array_equal(a, b)
    c = reverse_sample(cfg, default_schedule, 500, seed=13)
    assert not np.array_equal(a, c)


def test_physical_mode_moments(baseline_params, default_schedule):
    pred = oracle_for(baseline_params, default_schedule)
    cfg = SamplerConfig(mode=PHYSICAL, predictor=pred)
    samples = reverse_sample(cfg, default_schedule, 200_000, seed=21)
    std0 = math.sqrt(baseline_params.v0)
    z = (samples.mean() - baseline_params.m_p) / (std0 / math.sqrt(samples.size))
    assert abs(z) < 4
    assert samples.std(ddof=1) == pytest.approx(std0, rel=0.01)


def test_risk_neutral_moments(baseline_params, default_schedule):
    pred = oracle_for(baseline_params, default_schedule)
    cfg = risk_neutral_config(pred, baseline_params)
    samples = reverse_sample(cfg, default_schedule, 200_000, seed=21)
    std0 = math.sqrt(baseline_params.v0)
    z = (samples.mean() - baseline_params.m_q) / (std0 / math.sqrt(samples.size))
    assert abs(z) < 4
    assert samples.std(ddof=1) == pytest.approx(std0, rel=0.01)


def test_shift_moves_mean_not_spread(baseline_params, default_schedule):
    """With the affine oracle the shift is a pure translation of the output."""
    pred = oracle_for(baseline_params, default_schedule)
    rn = risk_neutral_config(pred, baseline_params)
    phys = SamplerConfig(mode=PHYSICAL, predictor=pred)
    a = reverse_sample(rn, default_schedule, 50_000, seed=4)
    b = reverse_sample(phys, default_schedule, 50_000, seed=4)
    diff = a - b
    assert np.ptp(diff) < 1e-10
    gap = baseline_params.m_q - baseline_params.m_p
    assert diff.mean() == pytest.approx(gap, rel=0.05)


def test_terminal_law_is_gaussian(baseline_params, default_schedule):
    pred = oracle_for(baseline_params, default_schedule)
    cfg = risk_neutral_config(pred, baseline_params)
    samples = reverse_sample(cfg, default_schedule, 1000, seed=30)
    stat, p = ks_gaussian(samples, baseline_params.m_q, baseline_params.v0)
    assert stat < 1.358 / math.sqrt(1000)
    assert p > 0.05


def test_build_paths_invariants(baseline_params):
    calls = []

    def step(n, seed):
        calls.append(seed)
        return np.full(n, 0.001)

    paths = build_paths(step, baseline_params, 7, seed=99)
    assert calls == [(99, h) for h in range(1, 22)]
    assert paths.prices.shape == (7, 22)
    assert np.all(paths.prices[:, 0] == 100.0)
    np.testing.assert_allclose(paths.terminal, 100.0 * math.exp(0.021), rtol=1e-12)
    assert paths.measure == "Q"
    assert paths.seed == 99


def test_single_step_horizon(baseline_params, default_schedule):
    params = dataclasses.replace(baseline_params, horizon=1)
    pred = oracle_for(params, default_schedule)
    cfg = risk_neutral_config(pred, params)
    paths = ddpm_paths(cfg, params, 50, seed=1)
    assert paths.prices.shape == (50, 2)
    np.testing.assert_allclose(
        paths.terminal, 100.0 * np.exp(paths.returns[:, 0]), rtol=1e-12)


def test_risk_neutral_requires_shift(default_schedule):
    pred = OraclePredictor(default_schedule)
    with pytest.raises(ValueError):
        SamplerConfig(mode="risk_neutral", predictor=pred)
    with pytest.raises(ValueError):
        SamplerConfig(mode="martingale", predictor=pred)


def test_shift_schedule_mismatch_rejected(baseline_params, default_schedule):
    from rnddpm import shift_constants

    other = build_schedule(40, 1e-4, 0.02)
    pred = OraclePredictor(default_schedule)
    bad = shift_constants(other, v0=1.0, mean_gap=0.1)
    with pytest.raises(ValueError):
        SamplerConfig(mode="risk_neutral", predictor=pred, shift=bad)
