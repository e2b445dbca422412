"""Noise predictors for the reverse diffusion.

Two interchangeable variants:

* `OraclePredictor` -- the exact conditional mean E[eps | Y_t = y] for
  Gaussian clean data, in closed form. Used to isolate sampler correctness.
* `MLPPredictor` -- a small fully-connected network trained on the standard
  noise-matching objective with manual backpropagation (no ML framework).

Both operate in standardized coordinates and carry the (shift, scale)
normalization that maps raw returns to those coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import standard_normals, substream
from .schedule import DiffusionSchedule, build_schedule

MODEL_FORMAT_VERSION = 1
TIME_EMBED_DIM = 16


class TrainingError(RuntimeError):
    """Raised when training diverges or fails its held-out accuracy gate."""


def oracle_predict(m: float, v0: float, sched: DiffusionSchedule, y, t: int):
    """Exact conditional mean of the injected noise for Gaussian clean data.

    For Y_t ~ N(sqrt(abar_t) m, sigma_t^2) with sigma_t^2 = abar_t v0 +
    (1 - abar_t):

        E[eps | Y_t = y] = sqrt(1 - abar_t) * (y - sqrt(abar_t) m) / sigma_t^2

    which equals -sqrt(1 - abar_t) times the Gaussian score at y.
    """
    if not 1 <= t <= sched.T:
        raise ValueError(f"t must be in [1, {sched.T}], got {t}")
    abar = sched.alpha_bar[t - 1]
    sigma_sq = abar * v0 + (1.0 - abar)
    return math.sqrt(1.0 - abar) * (np.asarray(y, dtype=float) - math.sqrt(abar) * m) / sigma_sq


@dataclass(frozen=True)
class OraclePredictor:
    """Analytic noise predictor for N(mean, var) clean data.

    mean/var are in standardized (training) coordinates; norm_shift and
    norm_scale map raw returns to those coordinates.
    """

    schedule: DiffusionSchedule
    mean: float = 0.0
    var: float = 1.0
    norm_shift: float = 0.0
    norm_scale: float = 1.0

    def __post_init__(self):
        if self.var <= 0:
            raise ValueError(f"var must be positive, got {self.var}")
        if self.norm_scale <= 0:
            raise ValueError(f"norm_scale must be positive, got {self.norm_scale}")

    def predict(self, y, t: int):
        return oracle_predict(self.mean, self.var, self.schedule, y, t)


def time_embedding(T: int, dim: int = TIME_EMBED_DIM) -> np.ndarray:
    """Sinusoidal embedding table for steps 1..T, shape (T, dim)."""
    half = dim // 2
    steps = np.arange(1, T + 1, dtype=float)[:, None]
    freqs = np.exp(-math.log(10000.0) * np.arange(half, dtype=float) / half)[None, :]
    angles = steps * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


@dataclass
class TrainingConfig:
    n_samples: int = 50_000
    epochs: int = 400
    batch_size: int = 256
    learning_rate: float = 3e-3
    hidden_width: int = 64
    seed: int = 0

    def __post_init__(self):
        for name in ("n_samples", "batch_size", "hidden_width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def _init_weights(in_dim: int, width: int, gen) -> dict:
    def layer(n_in, n_out):
        return gen.normal(0.0, math.sqrt(1.0 / n_in), size=(n_in, n_out))

    return {
        "W1": layer(in_dim, width),
        "b1": np.zeros(width),
        "W2": layer(width, width),
        "b2": np.zeros(width),
        "W3": layer(width, 1),
        "b3": np.zeros(1),
        # Time-gated linear skip: output += y * (embed @ u + c). The exact
        # conditional mean is y times a smooth function of t, which the tanh
        # trunk cannot extrapolate past the training range; the gate can
        # represent it exactly and keeps the tails linear.
        "u": np.zeros(in_dim - 1),
        "c": np.zeros(1),
    }


def mlp_forward(weights: dict, features: np.ndarray) -> np.ndarray:
    """Forward pass; features has shape (n, 1 + TIME_EMBED_DIM)."""
    w = weights
    h1 = np.tanh(features @ w["W1"] + w["b1"])
    h2 = np.tanh(h1 @ w["W2"] + w["b2"])
    gate = features[:, 1:] @ w["u"] + w["c"][0]
    return (h2 @ w["W3"])[:, 0] + w["b3"][0] + features[:, 0] * gate


def mlp_loss_and_grads(weights: dict, features: np.ndarray, targets: np.ndarray):
    """Mean squared error and its gradients by manual backprop."""
    w = weights
    n = features.shape[0]
    y = features[:, 0]
    emb = features[:, 1:]
    h1 = np.tanh(features @ w["W1"] + w["b1"])
    h2 = np.tanh(h1 @ w["W2"] + w["b2"])
    gate = emb @ w["u"] + w["c"][0]
    out = (h2 @ w["W3"])[:, 0] + w["b3"][0] + y * gate
    resid = out - targets
    loss = float(np.mean(resid**2))

    d_out = (2.0 / n) * resid
    grads = {}
    grads["u"] = emb.T @ (d_out * y)
    grads["c"] = np.array([np.sum(d_out * y)])
    d_col = d_out[:, None]
    grads["W3"] = h2.T @ d_col
    grads["b3"] = d_col.sum(axis=0)
    d_h2 = (d_col @ w["W3"].T) * (1.0 - h2**2)
    grads["W2"] = h1.T @ d_h2
    grads["b2"] = d_h2.sum(axis=0)
    d_h1 = (d_h2 @ w["W2"].T) * (1.0 - h1**2)
    grads["W1"] = features.T @ d_h1
    grads["b1"] = d_h1.sum(axis=0)
    return loss, grads


class MLPPredictor:
    """Trained noise predictor: input (y, sinusoidal embedding of t)."""

    def __init__(self, schedule: DiffusionSchedule, weights: dict,
                 norm_shift: float, norm_scale: float):
        if norm_scale <= 0:
            raise ValueError(f"norm_scale must be positive, got {norm_scale}")
        self.schedule = schedule
        self.weights = weights
        self.norm_shift = float(norm_shift)
        self.norm_scale = float(norm_scale)
        self._embed = time_embedding(schedule.T)
        # Per-t caches: the embedding's first-layer projection and gate value
        # depend only on t, so prediction at fixed t is a rank-1 update plus
        # one hidden matmul. Single precision: tanh throughput dominates the
        # sampler, and net error (~1e-2) dwarfs float32 rounding.
        f32 = np.float32
        self._w1_y = weights["W1"][0, :].astype(f32)
        self._embed_proj = (self._embed @ weights["W1"][1:, :] + weights["b1"]).astype(f32)
        self._gate = (self._embed @ weights["u"] + weights["c"][0]).astype(f32)
        self._W2 = weights["W2"].astype(f32)
        self._b2 = weights["b2"].astype(f32)
        self._W3 = weights["W3"].astype(f32)
        self._b3 = f32(weights["b3"][0])

    def predict(self, y, t: int):
        if not 1 <= t <= self.schedule.T:
            raise ValueError(f"t must be in [1, {self.schedule.T}], got {t}")
        y32 = np.asarray(y, dtype=np.float32)
        i = t - 1
        h1 = np.tanh(y32[:, None] * self._w1_y + self._embed_proj[i])
        h2 = np.tanh(h1 @ self._W2 + self._b2)
        out = (h2 @ self._W3)[:, 0] + self._b3 + y32 * self._gate[i]
        return out.astype(float)


def _noising_batch(y0: np.ndarray, sched: DiffusionSchedule, embed: np.ndarray, gen):
    """Build one (features, target) batch from clean samples y0."""
    n = y0.shape[0]
    t_idx = gen.integers(0, sched.T, size=n)
    eps = standard_normals(gen, n)
    abar = sched.alpha_bar[t_idx]
    z = np.sqrt(abar) * y0 + np.sqrt(1.0 - abar) * eps
    features = np.concatenate([z[:, None], embed[t_idx]], axis=1)
    return features, eps


def train(data: np.ndarray, sched: DiffusionSchedule, cfg: TrainingConfig) -> MLPPredictor:
    """Fit the noise predictor on raw returns by SGD with momentum.

    Data is standardized internally (sample mean / std); training pairs are
    (noised sample, injected noise) with t uniform on {1, ..., T}. The fit is
    accepted only if its held-out MSE is within 5% of the analytic oracle's
    MSE on the same held-out pairs, the irreducible floor for Gaussian data.
    """
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise ValueError("training data must be non-empty")
    shift = float(np.mean(data))
    scale = float(np.std(data))
    if scale <= 0:
        raise ValueError("training data has zero variance")
    y0_all = (data - shift) / scale

    gen = substream(cfg.seed, 0xD1F)
    perm = gen.permutation(y0_all.shape[0])
    n_holdout = max(1, y0_all.shape[0] // 10)
    holdout, train_set = y0_all[perm[:n_holdout]], y0_all[perm[n_holdout:]]

    embed = time_embedding(sched.T)
    weights = _init_weights(1 + TIME_EMBED_DIM, cfg.hidden_width, gen)
    velocity = {k: np.zeros_like(v) for k, v in weights.items()}
    momentum = 0.9

    n_train = train_set.shape[0]
    loss_history = []
    for epoch in range(cfg.epochs):
        # Linear decay to zero; the late small steps settle the affine
        # component that sets the sampled mean.
        lr = cfg.learning_rate * (1.0 - epoch / cfg.epochs)
        order = gen.permutation(n_train)
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, n_train, cfg.batch_size):
            batch = train_set[order[lo:lo + cfg.batch_size]]
            features, targets = _noising_batch(batch, sched, embed, gen)
            loss, grads = mlp_loss_and_grads(weights, features, targets)
            if not math.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch} (loss={loss})")
            for k in weights:
                velocity[k] = momentum * velocity[k] - lr * grads[k]
                weights[k] = weights[k] + velocity[k]
            epoch_loss += loss
            n_batches += 1
        loss_history.append(epoch_loss / n_batches)

    # Held-out gate against the analytic floor, on identical noised pairs.
    gen_pairs = substream(cfg.seed, 0xE7A)
    n_h = holdout.shape[0]
    t_idx = gen_pairs.integers(0, sched.T, size=n_h)
    eps = standard_normals(gen_pairs, n_h)
    abar = sched.alpha_bar[t_idx]
    z = np.sqrt(abar) * holdout + np.sqrt(1.0 - abar) * eps
    features = np.concatenate([z[:, None], embed[t_idx]], axis=1)
    net_mse = float(np.mean((mlp_forward(weights, features) - eps) ** 2))
    # Standardized data is ~N(0, 1), so the oracle's conditional mean is
    # sqrt(1 - abar) z / sigma^2 with sigma^2 = abar + (1 - abar) = 1.
    sigma_sq = abar * 1.0 + (1.0 - abar)
    oracle_pred = np.sqrt(1.0 - abar) * z / sigma_sq
    oracle_mse = float(np.mean((oracle_pred - eps) ** 2))
    if net_mse > 1.05 * oracle_mse:
        raise TrainingError(
            f"held-out MSE {net_mse:.6f} exceeds 1.05x oracle floor {oracle_mse:.6f} "
            f"after {cfg.epochs} epochs"
        )

    predictor = MLPPredictor(sched, weights, norm_shift=shift, norm_scale=scale)
    predictor.heldout_mse = net_mse
    predictor.oracle_floor_mse = oracle_mse
    predictor.loss_history = loss_history
    return predictor


_WEIGHT_KEYS = ("W1", "b1", "W2", "b2", "W3", "b3", "u", "c")


def save_model(path: str, predictor) -> None:
    """Persist a predictor; round-trips bit-exactly via `load_model`.

    Format: npz with a version field, the schedule triple, the normalization
    pair, then (for the trained variant) weight arrays in fixed order.
    """
    sched = predictor.schedule
    common = {
        "format_version": np.array(MODEL_FORMAT_VERSION),
        "schedule": np.array([float(sched.T), sched.beta_start, sched.beta_end]),
        "normalization": np.array([predictor.norm_shift, predictor.norm_scale]),
    }
    if isinstance(predictor, OraclePredictor):
        np.savez(path, kind=np.array("oracle"),
                 oracle_params=np.array([predictor.mean, predictor.var]), **common)
    elif isinstance(predictor, MLPPredictor):
        weight_blobs = {k: predictor.weights[k] for k in _WEIGHT_KEYS}
        np.savez(path, kind=np.array("mlp"), **common, **weight_blobs)
    else:
        raise TypeError(f"cannot persist predictor of type {type(predictor)!r}")


def load_model(path: str):
    with np.load(path) as blob:
        version = int(blob["format_version"])
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        T, beta_start, beta_end = blob["schedule"]
        sched = build_schedule(int(T), float(beta_start), float(beta_end))
        shift, scale = (float(x) for x in blob["normalization"])
        kind = str(blob["kind"])
        if kind == "oracle":
            mean, var = (float(x) for x in blob["oracle_params"])
            return OraclePredictor(sched, mean=mean, var=var,
                                   norm_shift=shift, norm_scale=scale)
        if kind == "mlp":
            weights = {k: blob[k] for k in _WEIGHT_KEYS}
            return MLPPredictor(sched, weights, norm_shift=shift, norm_scale=scale)
        raise ValueError(f"unknown predictor kind {kind!r}")
