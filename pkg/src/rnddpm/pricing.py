"""Monte Carlo derivative pricing on simulated price paths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .market import OptionKind, OptionSpec, implied_vol
from .paths import PricePaths


@dataclass(frozen=True)
class PriceEstimate:
    """Discounted Monte Carlo mean payoff with its standard error."""

    value: float
    std_error: float
    n_paths: int
    spec: OptionSpec
    discount: float


def _estimate(payoffs: np.ndarray, discount: float, spec: OptionSpec) -> PriceEstimate:
    n = payoffs.shape[0]
    value = discount * float(np.mean(payoffs))
    std_error = discount * float(np.std(payoffs, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return PriceEstimate(value=value, std_error=std_error, n_paths=n,
                         spec=spec, discount=discount)


def price_european(paths: PricePaths, K: float, r: float, dt: float = 1.0 / 252) -> PriceEstimate:
    """Discounted mean of (S_T - K)+ over the paths."""
    H = paths.horizon
    if H < 1:
        raise ValueError("paths must have at least one step")
    spec = OptionSpec(OptionKind.EUROPEAN_CALL, strike=K, maturity_steps=H)
    discount = math.exp(-r * H * dt)
    payoffs = np.maximum(paths.terminal - K, 0.0)
    return _estimate(payoffs, discount, spec)


def price_asian_arithmetic(paths: PricePaths, K: float, r: float,
                           dt: float = 1.0 / 252) -> PriceEstimate:
    """Discounted mean of (A - K)+ with A the arithmetic average of
    S_{t_1}, ..., S_{t_H} (the deterministic S_{t_0} is excluded)."""
    H = paths.horizon
    if H < 1:
        raise ValueError("paths must have at least one step")
    spec = OptionSpec(OptionKind.ASIAN_ARITHMETIC_CALL, strike=K, maturity_steps=H)
    discount = math.exp(-r * H * dt)
    average = paths.prices[:, 1:].mean(axis=1)
    payoffs = np.maximum(average - K, 0.0)
    return _estimate(payoffs, discount, spec)


def price_strip(paths: PricePaths, strikes: Sequence[float], r: float,
                dt: float = 1.0 / 252):
    """European price and implied vol per strike.

    Un-invertible prices (outside no-arbitrage bounds) propagate the NaN
    sentinel in the vol column.
    """
    if len(strikes) == 0:
        raise ValueError("strikes must be non-empty")
    T_years = paths.horizon * dt
    out = []
    for K in strikes:
        est = price_european(paths, K, r, dt=dt)
        vol = implied_vol(max(est.value, 0.0), paths.s0, K, r, T_years)
        out.append((float(K), est, vol))
    return out
