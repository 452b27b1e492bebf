"""Synthetic two-view data with controllable shared and view-private content.

Each sample draws a class label, forms a latent y = scale * prototype_c +
jitter, and renders two views

    v_k = shared_scale * W_s y + nuisance_scale * W_k n_k + noise_scale * eps_k

with W_s shared between views and W_1 != W_2 fixed per generator. The
nuisance latents n_k are the view-private (superfluous) content; the shared
latent carries everything a downstream probe can use.

Also here: the representation-quality metrics (linear probe, uniformity,
per-coordinate spread) and a replayable binary dump of generated batches:

    line 1: b"MVEBDATA1\\n"
    line 2: one JSON object with m, dims and the generator seed
    body:   v1, v2, latent, labels — row-major little-endian float64
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .sphere import normalize_rows

__all__ = [
    "GenConfig",
    "ViewPairBatch",
    "ViewPairGenerator",
    "generate",
    "linear_probe",
    "uniformity_metric",
    "embedding_spread",
    "save_batch",
    "load_batch",
]

_DATA_MAGIC = b"MVEBDATA1\n"

PROTOTYPE_SCALE = 3.0
CLASS_JITTER = 0.5
MIN_PROTOTYPE_ANGLE_DEG = 60.0


@dataclass(frozen=True)
class GenConfig:
    num_classes: int = 4
    latent_dim: int = 8
    input_dim: int = 32
    shared_scale: float = 1.0
    nuisance_scale: float = 1.0
    noise_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 1 or self.latent_dim < 1 or self.input_dim < 1:
            raise ValueError("num_classes, latent_dim and input_dim must be >= 1")
        if min(self.shared_scale, self.nuisance_scale, self.noise_scale) < 0:
            raise ValueError("scales must be nonnegative")


@dataclass(frozen=True)
class ViewPairBatch:
    v1: np.ndarray
    v2: np.ndarray
    labels: np.ndarray
    latent: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        m = self.v1.shape[0]
        if not (self.v2.shape[0] == self.labels.shape[0] == self.latent.shape[0] == m):
            raise ValueError("batch fields must share the leading dimension")


def _spread_prototypes(rng: np.random.Generator, num_classes: int, dim: int) -> np.ndarray:
    # orthonormal prototypes whenever the latent has room; otherwise rejection
    # sample until the minimum pairwise angle clears the floor
    if num_classes <= dim:
        q, _ = np.linalg.qr(rng.standard_normal((dim, num_classes)))
        return q.T
    cos_max = np.cos(np.deg2rad(MIN_PROTOTYPE_ANGLE_DEG))
    for _ in range(1000):
        P = normalize_rows(rng.standard_normal((num_classes, dim)))
        G = P @ P.T
        np.fill_diagonal(G, -1.0)
        if G.max() <= cos_max:
            return P
    raise ValueError(
        f"could not place {num_classes} prototypes at >= {MIN_PROTOTYPE_ANGLE_DEG} degrees in dimension {dim}"
    )


class ViewPairGenerator:
    """Holds the frozen random maps; batches are drawn against a passed rng."""

    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        map_ss, self._batch_ss = np.random.SeedSequence(cfg.seed).spawn(2)
        rng = np.random.default_rng(map_ss)
        self.prototypes = _spread_prototypes(rng, cfg.num_classes, cfg.latent_dim)
        scale = 1.0 / np.sqrt(cfg.latent_dim)
        self.w_shared = rng.standard_normal((cfg.input_dim, cfg.latent_dim)) * scale
        self.w_view1 = rng.standard_normal((cfg.input_dim, cfg.latent_dim)) * scale
        self.w_view2 = rng.standard_normal((cfg.input_dim, cfg.latent_dim)) * scale

    def fresh_rng(self) -> np.random.Generator:
        return np.random.default_rng(self._batch_ss)

    def batch(self, m: int, rng: np.random.Generator) -> ViewPairBatch:
        if m < 1:
            raise ValueError(f"batch size must be positive, got {m}")
        cfg = self.cfg
        labels = rng.integers(cfg.num_classes, size=m)
        latent = PROTOTYPE_SCALE * self.prototypes[labels] + CLASS_JITTER * rng.standard_normal(
            (m, cfg.latent_dim)
        )
        shared = cfg.shared_scale * (latent @ self.w_shared.T)
        views = []
        for w_view in (self.w_view1, self.w_view2):
            nuis = rng.standard_normal((m, cfg.latent_dim))
            eps = rng.standard_normal((m, cfg.input_dim))
            views.append(shared + cfg.nuisance_scale * (nuis @ w_view.T) + cfg.noise_scale * eps)
        return ViewPairBatch(v1=views[0], v2=views[1], labels=labels, latent=latent, seed=cfg.seed)


def generate(cfg: GenConfig, m: int) -> ViewPairBatch:
    """One deterministic batch: same (cfg, m) always yields the same arrays."""
    gen = ViewPairGenerator(cfg)
    return gen.batch(m, gen.fresh_rng())


def linear_probe(
    train_Z,
    train_labels,
    test_Z,
    test_labels,
    l2: float = 1e-3,
    steps: int = 500,
    lr: float = 0.1,
) -> float:
    """Multinomial logistic regression by full-batch gradient descent.

    Deterministic (zero init, fixed step count); returns test accuracy.
    """
    if l2 < 0:
        raise ValueError("l2 must be nonnegative")
    X = np.asarray(train_Z, dtype=float)
    y = np.asarray(train_labels)
    Xt = np.asarray(test_Z, dtype=float)
    yt = np.asarray(test_labels)
    if X.shape[0] != y.shape[0] or Xt.shape[0] != yt.shape[0] or X.shape[1] != Xt.shape[1]:
        raise ValueError("probe inputs have inconsistent shapes")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("probe needs at least 2 classes in the training labels")
    index = {c: i for i, c in enumerate(classes)}
    yi = np.array([index[c] for c in y])
    m, d = X.shape
    C = classes.size
    onehot = np.zeros((m, C))
    onehot[np.arange(m), yi] = 1.0
    W = np.zeros((d, C))
    b = np.zeros(C)
    for _ in range(steps):
        logits = X @ W + b
        logits -= logits.max(axis=1, keepdims=True)
        P = np.exp(logits)
        P /= P.sum(axis=1, keepdims=True)
        G = (P - onehot) / m
        W -= lr * (X.T @ G + l2 * W)
        b -= lr * G.sum(axis=0)
    pred = classes[np.argmax(Xt @ W + b, axis=1)]
    return float(np.mean(pred == yt))


def uniformity_metric(Z) -> float:
    """log mean over distinct pairs of exp(-2 |z_i - z_j|^2); 0 is fully collapsed."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise ValueError("uniformity needs at least 2 embeddings")
    sq = np.sum(Z * Z, axis=1)
    d2 = np.clip(sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T), 0.0, None)
    iu = np.triu_indices(Z.shape[0], k=1)
    vals = -2.0 * d2[iu]
    vmax = vals.max()
    return float(vmax + np.log(np.mean(np.exp(vals - vmax))))


def embedding_spread(Z) -> float:
    """Mean over coordinates of the per-coordinate standard deviation."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise ValueError("spread needs at least 2 embeddings")
    return float(np.mean(np.std(Z, axis=0)))


def save_batch(batch: ViewPairBatch, path) -> None:
    """Write the replayable dump format documented in the module docstring."""
    meta = {
        "m": int(batch.v1.shape[0]),
        "input_dim": int(batch.v1.shape[1]),
        "latent_dim": int(batch.latent.shape[1]),
        "seed": batch.seed,
    }
    with open(path, "wb") as f:
        f.write(_DATA_MAGIC)
        f.write((json.dumps(meta) + "\n").encode("ascii"))
        for arr in (batch.v1, batch.v2, batch.latent):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(batch.labels, dtype="<f8").tobytes())


def load_batch(path) -> ViewPairBatch:
    with open(path, "rb") as f:
        if f.readline() != _DATA_MAGIC:
            raise ValueError("not a view-pair dump (bad magic)")
        meta = json.loads(f.readline().decode("ascii"))
        m, din, dlat = meta["m"], meta["input_dim"], meta["latent_dim"]

        def block(rows, cols):
            return np.frombuffer(f.read(8 * rows * cols), dtype="<f8").reshape(rows, cols).astype(float)

        v1 = block(m, din)
        v2 = block(m, din)
        latent = block(m, dlat)
        labels = np.frombuffer(f.read(8 * m), dtype="<f8").astype(np.int64)
        if f.read(1):
            raise ValueError("trailing bytes after dump body")
    return ViewPairBatch(v1=v1, v2=v2, labels=labels, latent=latent, seed=meta["seed"])
