"""Bridge network for cross-modal pair matching, at toy scale.

Each modality is embedded into a shared ``n``-dimensional space by a single
linear layer followed by a sigmoid.  The bridge distance between the two
embeddings is their Euclidean distance scaled by ``1/sqrt(n)``; training
regresses it to 0 for matching pairs and to 1 for non-matching pairs.

Vectors are numpy arrays; a batch of pairs is a pair of 2-D arrays with one
row per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PARAMS_MAGIC = "BOXFUSION-BNN"
PARAMS_VERSION = 1


@dataclass
class Linear:
    weight: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)

    def copy(self) -> "Linear":
        return Linear(self.weight.copy(), self.bias.copy())


@dataclass
class BnnParams:
    theta_s: Linear
    theta_o: Linear

    def __post_init__(self) -> None:
        if self.theta_s.weight.shape[0] != self.theta_o.weight.shape[0]:
            raise ValueError("both embeddings must map to the same common dimension")

    @property
    def common_dim(self) -> int:
        return self.theta_s.weight.shape[0]

    def copy(self) -> "BnnParams":
        return BnnParams(self.theta_s.copy(), self.theta_o.copy())

    def flat(self) -> np.ndarray:
        return np.concatenate([
            self.theta_s.weight.ravel(), self.theta_s.bias,
            self.theta_o.weight.ravel(), self.theta_o.bias,
        ])

    def with_flat(self, v: np.ndarray) -> "BnnParams":
        out = self.copy()
        i = 0
        for arr in (out.theta_s.weight, out.theta_s.bias, out.theta_o.weight, out.theta_o.bias):
            arr.ravel()[:] = v[i:i + arr.size]
            i += arr.size
        return out


@dataclass
class PairDataset:
    """Positive (same region) and negative (different region) pairs.

    Rows of ``pos_s``/``pos_o`` form the positive pairs, rows of
    ``neg_s``/``neg_o`` the negative ones.
    """

    pos_s: np.ndarray
    pos_o: np.ndarray
    neg_s: np.ndarray
    neg_o: np.ndarray
    # latent region index of each row, kept for checking i != j on negatives
    pos_region: np.ndarray | None = None
    neg_region: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.pos_s) + len(self.neg_s)


@dataclass(frozen=True)
class BnnConfig:
    alpha: float = 1.0
    gamma: float = 0.5
    common_dim: int = 50
    learning_rate: float = 0.01
    lr_milestones: tuple[int, ...] = (30, 100)
    lr_decay: float = 2.0
    epochs: int = 200
    batch_size: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.common_dim < 1 or self.batch_size < 2 or self.epochs < 0:
            raise ValueError("common_dim >= 1, batch_size >= 2 and epochs >= 0 required")


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split on sign so exp never overflows
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def embed(x: np.ndarray, side: Linear) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != side.weight.shape[1]:
        raise ValueError(
            f"input dimension {x.shape[-1]} does not match embedding input {side.weight.shape[1]}"
        )
    return sigmoid(x @ side.weight.T + side.bias)


def bridge_distance(z_s: np.ndarray, z_o: np.ndarray) -> np.ndarray | float:
    z_s = np.asarray(z_s, dtype=float)
    z_o = np.asarray(z_o, dtype=float)
    if z_s.shape != z_o.shape:
        raise ValueError(f"shape mismatch {z_s.shape} vs {z_o.shape}")
    n = z_s.shape[-1]
    d = np.linalg.norm(z_s - z_o, axis=-1) / math.sqrt(n)
    return float(d) if np.ndim(d) == 0 else d


def pair_distance(x_s: np.ndarray, x_o: np.ndarray, params: BnnParams) -> np.ndarray | float:
    return bridge_distance(embed(x_s, params.theta_s), embed(x_o, params.theta_o))


def _check_nonempty(x_s: np.ndarray, name: str) -> None:
    if len(x_s) == 0:
        raise ValueError(f"{name} pair set is empty")


def positive_loss(x_s: np.ndarray, x_o: np.ndarray, params: BnnParams) -> float:
    _check_nonempty(x_s, "positive")
    return float(np.mean(pair_distance(x_s, x_o, params) ** 2))


def negative_loss(x_s: np.ndarray, x_o: np.ndarray, params: BnnParams) -> float:
    _check_nonempty(x_s, "negative")
    return float(np.mean((pair_distance(x_s, x_o, params) - 1.0) ** 2))


def combine_losses(l_p: float, l_n: float, alpha: float) -> float:
    return (l_p + alpha * l_n) / (1.0 + alpha)


def bnn_loss(data: PairDataset, params: BnnParams, alpha: float) -> float:
    return combine_losses(
        positive_loss(data.pos_s, data.pos_o, params),
        negative_loss(data.neg_s, data.neg_o, params),
        alpha,
    )


def _side_grads(
    x_s: np.ndarray, x_o: np.ndarray, target: float, weight: float, params: BnnParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gradient of ``weight * sum((f - target)^2)`` over a set of pairs."""
    z_s = embed(x_s, params.theta_s)
    z_o = embed(x_o, params.theta_o)
    n = z_s.shape[1]
    diff = z_s - z_o
    f = np.linalg.norm(diff, axis=1) / math.sqrt(n)
    # df/d(diff) = diff / (n f); pairs at f == 0 contribute nothing
    coef = np.zeros_like(f)
    nz = f > 0
    coef[nz] = weight * 2.0 * (f[nz] - target) / (n * f[nz])
    g_diff = coef[:, None] * diff
    g_s = g_diff * z_s * (1.0 - z_s)
    g_o = -g_diff * z_o * (1.0 - z_o)
    return g_s.T @ x_s, g_s.sum(axis=0), g_o.T @ x_o, g_o.sum(axis=0)


def grad_bnn(data: PairDataset, params: BnnParams, alpha: float) -> BnnParams:
    """Analytic gradient of :func:`bnn_loss`, returned in the shape of ``params``."""
    _check_nonempty(data.pos_s, "positive")
    _check_nonempty(data.neg_s, "negative")
    w_p = 1.0 / ((1.0 + alpha) * len(data.pos_s))
    w_n = alpha / ((1.0 + alpha) * len(data.neg_s))
    gp = _side_grads(data.pos_s, data.pos_o, 0.0, w_p, params)
    gn = _side_grads(data.neg_s, data.neg_o, 1.0, w_n, params)
    return BnnParams(
        Linear(gp[0] + gn[0], gp[1] + gn[1]),
        Linear(gp[2] + gn[2], gp[3] + gn[3]),
    )


def init_params(dim_s: int, dim_o: int, common_dim: int, rng: np.random.Generator) -> BnnParams:
    def layer(fan_in: int) -> Linear:
        w = rng.uniform(-0.5, 0.5, size=(common_dim, fan_in)) / math.sqrt(fan_in)
        return Linear(w, np.zeros(common_dim))

    return BnnParams(layer(dim_s), layer(dim_o))


def learning_rate_at(epoch: int, config: BnnConfig) -> float:
    drops = sum(1 for m in config.lr_milestones if epoch >= m)
    return config.learning_rate / config.lr_decay ** drops


def train_bnn(
    data: PairDataset, config: BnnConfig, init: BnnParams | None = None
) -> BnnParams:
    """Minibatch gradient descent on the combined loss.

    Each batch holds about half positives and half negatives so that both
    loss terms are defined on every step.
    """
    _check_nonempty(data.pos_s, "positive")
    _check_nonempty(data.neg_s, "negative")
    rng = np.random.default_rng(config.seed)
    if init is None:
        params = init_params(data.pos_s.shape[1], data.pos_o.shape[1], config.common_dim, rng)
    else:
        params = init.copy()
    n_pos, n_neg = len(data.pos_s), len(data.neg_s)
    half = max(1, config.batch_size // 2)
    n_batches = max(1, min(math.ceil(max(n_pos, n_neg) / half), n_pos, n_neg))

    for epoch in range(config.epochs):
        lr = learning_rate_at(epoch, config)
        pos_batches = np.array_split(rng.permutation(n_pos), n_batches)
        neg_batches = np.array_split(rng.permutation(n_neg), n_batches)
        for pi, ni in zip(pos_batches, neg_batches):
            batch = PairDataset(data.pos_s[pi], data.pos_o[pi], data.neg_s[ni], data.neg_o[ni])
            g = grad_bnn(batch, params, config.alpha)
            for p, dp in ((params.theta_s, g.theta_s), (params.theta_o, g.theta_o)):
                p.weight -= lr * dp.weight
                p.bias -= lr * dp.bias
    return params


def classify_pair(x_s: np.ndarray, x_o: np.ndarray, params: BnnParams, gamma: float):
    """True where the pair is predicted to match (distance strictly below ``gamma``)."""
    d = pair_distance(x_s, x_o, params)
    return d < gamma


def generate_synthetic_pairs(
    region_count: int,
    noise_scale: float,
    seed: int,
    latent_dim: int = 32,
    dim_s: int = 48,
    dim_o: int = 64,
    input_scale: float = 8.0,
) -> PairDataset:
    """Synthetic stand-in for co-registered SAR/optical patches.

    Every region has a latent vector; each modality observes it through its
    own fixed random linear map plus Gaussian noise, and the observation is
    multiplied by ``input_scale``.  At the default learning rate the sigmoid
    embeddings need inputs of this magnitude to saturate within 200 epochs;
    a latent dimension of 32 keeps random regions close to orthogonal so
    negatives stay well separated.  Negatives pair region
    ``i`` on the SAR side with region ``perm[i]`` on the optical side, where
    ``perm`` is a seeded derangement.
    """
    if region_count < 2:
        raise ValueError("region_count must be >= 2 to build negative pairs")
    rng = np.random.default_rng(seed)
    map_s = rng.normal(size=(dim_s, latent_dim))
    map_o = rng.normal(size=(dim_o, latent_dim))
    latent = rng.normal(size=(region_count, latent_dim))

    def observe(mapping: np.ndarray) -> np.ndarray:
        clean = latent @ mapping.T
        return input_scale * (clean + noise_scale * rng.normal(size=clean.shape))

    xs = observe(map_s)
    xo = observe(map_o)
    perm = derangement(region_count, rng)
    idx = np.arange(region_count)
    return PairDataset(xs, xo, xs.copy(), xo[perm], pos_region=idx, neg_region=perm)


def derangement(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random permutation with no fixed points (cyclic shift of a shuffle)."""
    order = rng.permutation(n)
    perm = np.empty(n, dtype=int)
    perm[order] = np.roll(order, 1)
    return perm


def split_dataset(data: PairDataset, holdout_pairs: int, seed: int) -> tuple[PairDataset, PairDataset]:
    """Hold out ``holdout_pairs`` pairs, split evenly between positives and negatives."""
    rng = np.random.default_rng(seed)
    k_pos = holdout_pairs // 2
    k_neg = holdout_pairs - k_pos
    if k_pos >= len(data.pos_s) or k_neg >= len(data.neg_s):
        raise ValueError("holdout larger than the dataset")
    pp = rng.permutation(len(data.pos_s))
    pn = rng.permutation(len(data.neg_s))

    def take(ip: np.ndarray, ineg: np.ndarray) -> PairDataset:
        return PairDataset(
            data.pos_s[ip], data.pos_o[ip], data.neg_s[ineg], data.neg_o[ineg],
            None if data.pos_region is None else data.pos_region[ip],
            None if data.neg_region is None else data.neg_region[ineg],
        )

    return take(pp[k_pos:], pn[k_neg:]), take(pp[:k_pos], pn[:k_neg])


@dataclass(frozen=True)
class PairMetrics:
    accuracy: float
    precision: float
    recall: float
    n_pairs: int = field(default=0)


def evaluate_pairs(data: PairDataset, params: BnnParams, gamma: float) -> PairMetrics:
    """Accuracy/precision/recall of match decisions, positives being the match class."""
    pred_p = np.asarray(classify_pair(data.pos_s, data.pos_o, params, gamma))
    pred_n = np.asarray(classify_pair(data.neg_s, data.neg_o, params, gamma))
    tp = int(pred_p.sum())
    fn = len(pred_p) - tp
    fp = int(pred_n.sum())
    tn = len(pred_n) - fp
    total = tp + fn + fp + tn
    return PairMetrics(
        accuracy=(tp + tn) / total,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / (tp + fn) if tp + fn else 0.0,
        n_pairs=total,
    )


def save_params(params: BnnParams, path: str | Path) -> None:
    """Text format: magic + version, dims, then row-major weights and biases (repr floats)."""
    lines = [
        f"{PARAMS_MAGIC} {PARAMS_VERSION}",
        f"{params.common_dim} {params.theta_s.weight.shape[1]} {params.theta_o.weight.shape[1]}",
    ]
    for arr in (params.theta_s.weight, params.theta_s.bias, params.theta_o.weight, params.theta_o.bias):
        lines.append(" ".join(repr(float(v)) for v in arr.ravel()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_params(path: str | Path) -> BnnParams:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if len(lines) != 6:
        raise ValueError(f"{path}: expected 6 lines, got {len(lines)}")
    head = lines[0].split()
    if len(head) != 2 or head[0] != PARAMS_MAGIC:
        raise ValueError(f"{path}: not a BNN parameter file")
    if int(head[1]) != PARAMS_VERSION:
        raise ValueError(f"{path}: unsupported version {head[1]}")
    n, d_s, d_o = (int(t) for t in lines[1].split())
    shapes = [(n, d_s), (n,), (n, d_o), (n,)]
    arrays = []
    for line, shape in zip(lines[2:], shapes):
        arr = np.array([float(t) for t in line.split()], dtype=float)
        if arr.size != math.prod(shape):
            raise ValueError(f"{path}: expected {math.prod(shape)} values, got {arr.size}")
        arrays.append(arr.reshape(shape))
    return BnnParams(Linear(arrays[0], arrays[1]), Linear(arrays[2], arrays[3]))
