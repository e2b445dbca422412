"""Simulated price path container with CSV serialization."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PricePaths:
    """N simulated price paths on a fixed grid of H steps.

    prices has shape (n_paths, H + 1) with column 0 identically s0;
    returns has shape (n_paths, H) and satisfies
    prices[:, h] = prices[:, h - 1] * exp(returns[:, h - 1]) exactly.
    """

    s0: float
    prices: np.ndarray
    returns: np.ndarray
    measure: str
    seed: int
    params_hash: str

    @property
    def n_paths(self) -> int:
        return self.prices.shape[0]

    @property
    def horizon(self) -> int:
        return self.prices.shape[1] - 1

    @property
    def terminal(self) -> np.ndarray:
        return self.prices[:, -1]

    @staticmethod
    def from_returns(s0, returns, measure, seed, params_hash) -> "PricePaths":
        returns = np.atleast_2d(np.asarray(returns, dtype=float))
        n, H = returns.shape
        prices = np.empty((n, H + 1))
        prices[:, 0] = s0
        # Step-wise multiply (not exp of cumsum) so the per-step identity
        # holds to the last bit.
        for h in range(1, H + 1):
            prices[:, h] = prices[:, h - 1] * np.exp(returns[:, h - 1])
        return PricePaths(
            s0=float(s0),
            prices=prices,
            returns=returns,
            measure=str(measure),
            seed=int(seed),
            params_hash=str(params_hash),
        )

    def to_csv(self) -> str:
        """Render as CSV: comment header, column names, one row per path."""
        buf = io.StringIO()
        buf.write(
            f"# seed={self.seed} measure={self.measure} "
            f"params={self.params_hash} s0={self.s0!r}\n"
        )
        buf.write(",".join(f"S_{h}" for h in range(self.horizon + 1)) + "\n")
        for row in self.prices:
            buf.write(",".join(f"{x:.17g}" for x in row) + "\n")
        return buf.getvalue()


def params_digest(record: str) -> str:
    """Short stable digest of a parameter record, stored with the paths
    so a CSV can be traced back to the settings that produced it."""
    return hashlib.sha256(record.encode()).hexdigest()[:12]
