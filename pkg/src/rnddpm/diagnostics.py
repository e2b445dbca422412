"""Statistical validation of simulated paths: martingale drift curves,
Kolmogorov-Smirnov test on terminal log-prices, one-step moment report."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .market import MarketParams, norm_cdf
from .paths import PricePaths


@dataclass(frozen=True)
class MomentReport:
    mean: float
    std: float
    z_mean: float
    z_std: float


@dataclass(frozen=True)
class DiagnosticsReport:
    mean_return: float
    std_return: float
    discounted_terminal_mean: float
    ks_statistic: float
    ks_p_value: float
    martingale_curve: np.ndarray  # (H+1, 3): t_h, M_h, SE_h

    def to_json(self) -> str:
        payload = {
            "mean_return": self.mean_return,
            "std_return": self.std_return,
            "discounted_terminal_mean": self.discounted_terminal_mean,
            "ks_statistic": self.ks_statistic,
            "ks_p_value": self.ks_p_value,
            "martingale_curve": self.martingale_curve.tolist(),
        }
        return json.dumps(payload, indent=2)


def martingale_curve(paths: PricePaths, r: float, dt: float = 1.0 / 252) -> np.ndarray:
    """Discounted mean price M_h = e^{-r t_h} mean(S_{t_h}) with its SE.

    Returns an (H+1, 3) array of (t_h, M_h, SE_h); M_0 = s0 and SE_0 = 0
    exactly.
    """
    H = paths.horizon
    n = paths.n_paths
    out = np.empty((H + 1, 3))
    for h in range(H + 1):
        t_h = h * dt
        disc = math.exp(-r * t_h)
        col = paths.prices[:, h]
        M_h = disc * float(np.mean(col))
        se_h = disc * float(np.std(col, ddof=1)) / math.sqrt(n) if (h > 0 and n > 1) else 0.0
        out[h] = (t_h, M_h, se_h)
    return out


def martingale_passes(curve: np.ndarray, s0: float, n_se: float = 3.0) -> bool:
    """True iff |M_h - s0| <= n_se * SE_h at every step h >= 1."""
    dev = np.abs(curve[1:, 1] - s0)
    return bool(np.all(dev <= n_se * curve[1:, 2]))


def kolmogorov_p_value(statistic: float, n: int) -> float:
    """Asymptotic KS p-value with the Stephens small-sample correction.

    lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) * D, then
    p = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2), truncated once terms
    drop below 1e-10.
    """
    sqrt_n = math.sqrt(n)
    lam = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic
    if lam <= 0:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-10:
            break
    return min(max(total, 0.0), 1.0)


def ks_gaussian(samples: np.ndarray, ref_mean: float, ref_var: float):
    """One-sample KS statistic and p-value against N(ref_mean, ref_var)."""
    if ref_var <= 0:
        raise ValueError(f"reference variance must be positive, got {ref_var}")
    samples = np.sort(np.asarray(samples, dtype=float))
    n = samples.shape[0]
    if n < 10:
        raise ValueError(f"need at least 10 samples, got {n}")
    std = math.sqrt(ref_var)
    cdf = np.array([norm_cdf((x - ref_mean) / std) for x in samples])
    grid = np.arange(1, n + 1) / n
    d_plus = float(np.max(grid - cdf))
    d_minus = float(np.max(cdf - (grid - 1.0 / n)))
    statistic = max(d_plus, d_minus)
    return statistic, kolmogorov_p_value(statistic, n)


def ks_terminal(paths: PricePaths, ref_mean: float, ref_var: float):
    """KS test of terminal log-prices against a Gaussian reference."""
    return ks_gaussian(np.log(paths.terminal), ref_mean, ref_var)


def moment_report(returns: np.ndarray, params: MarketParams, measure: str) -> MomentReport:
    """Sample one-step moments with z-scores against the analytic law."""
    returns = np.asarray(returns, dtype=float).ravel()
    n = returns.shape[0]
    if n == 0:
        raise ValueError("returns must be non-empty")
    mean = float(np.mean(returns))
    std = float(np.std(returns, ddof=1)) if n > 1 else 0.0
    target_mean = params.step_mean(measure)
    target_std = math.sqrt(params.v0)
    z_mean = (mean - target_mean) / (target_std / math.sqrt(n))
    z_std = (std - target_std) / (target_std / math.sqrt(2 * n))
    return MomentReport(mean=mean, std=std, z_mean=z_mean, z_std=z_std)


def diagnostics_report(paths: PricePaths, params: MarketParams,
                       ks_n: int = 1000) -> DiagnosticsReport:
    """Full diagnostics bundle for risk-neutral paths."""
    curve = martingale_curve(paths, params.r, dt=params.dt)
    H = paths.horizon
    ref_mean = math.log(params.s0) + H * params.m_q
    ref_var = H * params.v0
    n_ks = min(ks_n, paths.n_paths)
    stat, p = ks_gaussian(np.log(paths.terminal[:n_ks]), ref_mean, ref_var)
    rets = paths.returns.ravel()
    return DiagnosticsReport(
        mean_return=float(np.mean(rets)),
        std_return=float(np.std(rets, ddof=1)),
        discounted_terminal_mean=float(curve[-1, 1]),
        ks_statistic=stat,
        ks_p_value=p,
        martingale_curve=curve,
    )
