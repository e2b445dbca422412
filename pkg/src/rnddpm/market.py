"""Ground-truth GBM world: exact return laws under P and Q, reference Monte
Carlo paths, Black-Scholes pricing, and implied-volatility inversion."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .paths import PricePaths, params_digest
from .rng import normals, substream

TRADING_DAYS = 252


class OptionKind(enum.Enum):
    EUROPEAN_CALL = "european_call"
    ASIAN_ARITHMETIC_CALL = "asian_arithmetic_call"


@dataclass(frozen=True)
class MarketParams:
    """GBM world parameters on a fixed monitoring grid.

    One-step log-returns are N(m_p, v0) under the physical measure and
    N(m_q, v0) under the risk-neutral measure, with
    m_p = (mu - sigma^2/2) dt, m_q = (r - sigma^2/2) dt, v0 = sigma^2 dt.
    """

    s0: float
    mu: float
    r: float
    sigma: float
    dt: float = 1.0 / TRADING_DAYS
    horizon: int = 21

    def __post_init__(self):
        if self.s0 <= 0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")

    @property
    def m_p(self) -> float:
        return (self.mu - 0.5 * self.sigma**2) * self.dt

    @property
    def m_q(self) -> float:
        return (self.r - 0.5 * self.sigma**2) * self.dt

    @property
    def v0(self) -> float:
        return self.sigma**2 * self.dt

    @property
    def maturity(self) -> float:
        """Horizon in years."""
        return self.horizon * self.dt

    def step_mean(self, measure: str) -> float:
        if measure == "P":
            return self.m_p
        if measure == "Q":
            return self.m_q
        raise ValueError(f"measure must be 'P' or 'Q', got {measure!r}")

    def digest(self) -> str:
        record = (
            f"s0={self.s0!r} mu={self.mu!r} r={self.r!r} sigma={self.sigma!r} "
            f"dt={self.dt!r} H={self.horizon}"
        )
        return params_digest(record)


@dataclass(frozen=True)
class OptionSpec:
    kind: OptionKind
    strike: float
    maturity_steps: int

    def __post_init__(self):
        if self.strike <= 0:
            raise ValueError(f"strike must be positive, got {self.strike}")
        if self.maturity_steps < 1:
            raise ValueError(f"maturity_steps must be >= 1, got {self.maturity_steps}")


def sample_returns_exact(params: MarketParams, measure: str, n: int, seed) -> np.ndarray:
    """Draw n i.i.d. exact one-step log-returns under the given measure."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    gen = substream(seed)
    return normals(gen, n, mean=params.step_mean(measure), std=math.sqrt(params.v0))


def gbm_paths(params: MarketParams, measure: str, n_paths: int, seed: int) -> PricePaths:
    """Simulate exact GBM price paths (lognormal increments, no Euler bias).

    Each calendar step h draws from its own substream (seed, h), so paths are
    reproducible independently of batching.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    H = params.horizon
    rets = np.empty((n_paths, H))
    for h in range(1, H + 1):
        rets[:, h - 1] = sample_returns_exact(params, measure, n_paths, (seed, h))
    return PricePaths.from_returns(params.s0, rets, measure, seed, params.digest())


_SQRT2 = math.sqrt(2.0)


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    Accurate to roughly machine precision; the single place Phi is computed
    so an alternative approximation can be swapped in here.
    """
    return 0.5 * math.erfc(-x / _SQRT2)


def bs_call_price(s0: float, K: float, r: float, sigma: float, T_years: float) -> float:
    """Black-Scholes European call value."""
    if s0 <= 0 or K <= 0 or sigma <= 0:
        raise ValueError("s0, K and sigma must be positive")
    if T_years < 0:
        raise ValueError(f"T_years must be >= 0, got {T_years}")
    if T_years == 0:
        return max(s0 - K, 0.0)
    vol_sqrt_t = sigma * math.sqrt(T_years)
    d1 = (math.log(s0 / K) + (r + 0.5 * sigma**2) * T_years) / vol_sqrt_t
    d2 = d1 - vol_sqrt_t
    return s0 * norm_cdf(d1) - K * math.exp(-r * T_years) * norm_cdf(d2)


def bs_put_price(s0: float, K: float, r: float, sigma: float, T_years: float) -> float:
    """European put via put-call parity."""
    return bs_call_price(s0, K, r, sigma, T_years) - s0 + K * math.exp(-r * T_years)


VOL_LO = 1e-6
VOL_HI = 5.0
VOL_TOL = 1e-8


def implied_vol(price: float, s0: float, K: float, r: float, T_years: float) -> float:
    """Invert a call price to implied volatility by bisection.

    Returns NaN (the undefined sentinel, not an error) when the price sits
    outside the no-arbitrage band [max(s0 - K e^{-rT}, 0), s0] or outside the
    values reachable on the vol bracket [1e-6, 5].
    """
    if price < 0:
        raise ValueError(f"price must be >= 0, got {price}")
    if s0 <= 0 or K <= 0:
        raise ValueError("s0 and K must be positive")
    if T_years <= 0:
        raise ValueError(f"T_years must be positive, got {T_years}")
    lower = max(s0 - K * math.exp(-r * T_years), 0.0)
    if price <= lower or price >= s0:
        return math.nan
    lo, hi = VOL_LO, VOL_HI
    if not (bs_call_price(s0, K, r, lo, T_years) <= price <= bs_call_price(s0, K, r, hi, T_years)):
        return math.nan
    while hi - lo > VOL_TOL:
        mid = 0.5 * (lo + hi)
        if bs_call_price(s0, K, r, mid, T_years) < price:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def implied_rate(price: float, s0: float, K: float, sigma: float, T_years: float) -> float:
    """Solve for the risk-free rate matching a call price, by bisection."""
    lo, hi = -0.5, 1.0
    if not (bs_call_price(s0, K, lo, sigma, T_years) <= price <= bs_call_price(s0, K, hi, sigma, T_years)):
        raise ValueError(f"price {price} not bracketed by rates in [{lo}, {hi}]")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if bs_call_price(s0, K, mid, sigma, T_years) < price:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def baseline_rate() -> float:
    """Risk-free rate of the baseline experiment, recovered from the
    at-the-money one-month call value 2.51 (s0=K=100, sigma=0.2)."""
    return implied_rate(2.51, 100.0, 100.0, 0.2, 21.0 / TRADING_DAYS)
