"""Reverse-chain samplers and price-path construction.

The physical and risk-neutral samplers share one code path; risk-neutral
mode differs only in subtracting the per-step noise offset delta_t from the
predicted noise, so with a zero mean gap the two modes are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .market import MarketParams
from .paths import PricePaths
from .rng import standard_normals, substream
from .schedule import DiffusionSchedule, ShiftConstants

PHYSICAL = "physical"
RISK_NEUTRAL = "risk_neutral"


@dataclass(frozen=True)
class SamplerConfig:
    mode: str
    predictor: object
    shift: Optional[ShiftConstants] = None
    last_step_noise: bool = False

    def __post_init__(self):
        if self.mode not in (PHYSICAL, RISK_NEUTRAL):
            raise ValueError(f"mode must be {PHYSICAL!r} or {RISK_NEUTRAL!r}, got {self.mode!r}")
        if self.mode == RISK_NEUTRAL:
            if self.shift is None:
                raise ValueError("risk-neutral mode requires shift constants")
            if self.shift.delta.shape[0] != self.predictor.schedule.T:
                raise ValueError(
                    "shift constants were built for a different schedule "
                    f"(len {self.shift.delta.shape[0]} vs T={self.predictor.schedule.T})"
                )


def risk_neutral_config(predictor, params: MarketParams, **kwargs) -> SamplerConfig:
    """Sampler config targeting the risk-neutral return law.

    The mean gap lives in the predictor's standardized coordinates:
    (m_q - norm_shift) / norm_scale, so the de-standardized clean law has
    mean m_q with the trained variance untouched.
    """
    from .schedule import shift_constants

    gap = (params.m_q - predictor.norm_shift) / predictor.norm_scale
    shift = shift_constants(predictor.schedule, v0=1.0, mean_gap=gap)
    return SamplerConfig(mode=RISK_NEUTRAL, predictor=predictor, shift=shift, **kwargs)


def reverse_sample(cfg: SamplerConfig, sched: DiffusionSchedule, n: int, seed) -> np.ndarray:
    """Run the reverse chain for n independent samples; returns raw log-returns.

    Starts from z_T ~ N(0, 1) and iterates, for t = T..1,

        z_{t-1} = (z_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)
                  + sqrt(beta_tilde_t) * xi_t

    with eps_hat the predicted noise (minus delta_t in risk-neutral mode)
    and no innovation noise at t = 1 unless last_step_noise is set. The
    clean sample is de-standardized through the predictor's normalization.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    gen = substream(seed)
    delta = cfg.shift.delta if cfg.mode == RISK_NEUTRAL else None
    z = standard_normals(gen, n)
    for t in range(sched.T, 0, -1):
        i = t - 1
        eps_hat = cfg.predictor.predict(z, t)
        if delta is not None:
            eps_hat = eps_hat - delta[i]
        z = (z - sched.beta[i] / math.sqrt(1.0 - sched.alpha_bar[i]) * eps_hat) \
            / math.sqrt(sched.alpha[i])
        if t > 1 or cfg.last_step_noise:
            z = z + math.sqrt(sched.beta_tilde[i]) * standard_normals(gen, n)
    return cfg.predictor.norm_shift + cfg.predictor.norm_scale * z


def build_paths(sample_step: Callable[[int, object], np.ndarray],
                params: MarketParams, n_paths: int, seed: int,
                measure: str = "Q") -> PricePaths:
    """Compose price paths from independent per-step return batches.

    `sample_step(n, seed)` must return n log-returns; it is called once per
    calendar step h with the derived substream seed (seed, h), so steps are
    independent and the whole construction is reproducible.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    H = params.horizon
    rets = np.empty((n_paths, H))
    for h in range(1, H + 1):
        rets[:, h - 1] = sample_step(n_paths, (seed, h))
    return PricePaths.from_returns(params.s0, rets, measure, seed, params.digest())


def ddpm_paths(cfg: SamplerConfig, params: MarketParams, n_paths: int, seed: int) -> PricePaths:
    """Price paths driven by the reverse-chain sampler."""
    sched = cfg.predictor.schedule
    measure = "Q" if cfg.mode == RISK_NEUTRAL else "P"
    return build_paths(
        lambda n, s: reverse_sample(cfg, sched, n, s),
        params, n_paths, seed, measure=measure,
    )
