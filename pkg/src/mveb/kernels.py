"""Kernels, Gram matrices and the median-bandwidth heuristic.

Two strictly positive kernels are supported:

    vmf:  k(z, z') = exp((z . z') / delta)        on unit vectors
    rbf:  k(x, y)  = exp(-|x - y|^2 / (2 sigma2)) on arbitrary vectors

plus the batched quantities the score estimator consumes: the M x M Gram
matrix and the kernel-gradient sum B with B[i, j] = (1/M) sum_m
d k(x_i, x_m) / d (x_m)_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sphere import require_unit_rows

__all__ = [
    "KernelSpec",
    "GramMatrix",
    "vmf_kernel",
    "rbf_kernel",
    "median_bandwidth",
    "rbf_median_bandwidth",
    "resolve_bandwidth",
    "gram",
    "gram_grad_sum",
]

VMF = "vmf"
RBF = "rbf"
FIXED = "fixed"
MEDIAN = "median_heuristic"

DEFAULT_BANDWIDTH_FLOOR = 1e-3


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus how its bandwidth is chosen.

    bandwidth is delta for the vmf family and sigma2 for rbf; it may be None
    when bandwidth_mode is "median_heuristic". bandwidth_floor guards the
    median against collapsed batches.
    """

    family: str
    bandwidth: float | None = None
    bandwidth_mode: str = FIXED
    bandwidth_floor: float = DEFAULT_BANDWIDTH_FLOOR

    def __post_init__(self):
        if self.family not in (VMF, RBF):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.bandwidth_mode not in (FIXED, MEDIAN):
            raise ValueError(f"unknown bandwidth mode {self.bandwidth_mode!r}")
        if self.bandwidth_mode == FIXED:
            if self.bandwidth is None or self.bandwidth <= 0:
                raise ValueError("fixed mode requires a positive bandwidth")
        if self.bandwidth_floor <= 0:
            raise ValueError("bandwidth_floor must be positive")


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    kernel: KernelSpec
    resolved_bandwidth: float


def vmf_kernel(z, z2, delta: float) -> float:
    """exp((z . z2) / delta) for unit vectors z, z2."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    z = require_unit_rows(z)[0]
    z2 = require_unit_rows(z2)[0]
    if z.shape != z2.shape:
        raise ValueError(f"dimension mismatch: {z.shape} vs {z2.shape}")
    return math.exp(float(z @ z2) / delta)


def rbf_kernel(x, y, sigma2: float) -> float:
    """exp(-|x - y|^2 / (2 sigma2))."""
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    d = x - y
    return math.exp(-float(d @ d) / (2.0 * sigma2))


def _pair_values(vals: np.ndarray) -> np.ndarray:
    # strict upper triangle of a square matrix, i.e. distinct unordered pairs
    iu = np.triu_indices(vals.shape[0], k=1)
    return vals[iu]


def median_bandwidth(Z, floor: float = DEFAULT_BANDWIDTH_FLOOR) -> float:
    """Median of pairwise cosine distances 1 - z_i . z_j over distinct pairs.

    The median of an even-length list is the midpoint of the two central
    order statistics; the result is clamped from below by `floor`.
    """
    if floor <= 0:
        raise ValueError(f"floor must be positive, got {floor}")
    Z = require_unit_rows(Z)
    if Z.shape[0] < 2:
        raise ValueError("median bandwidth needs at least 2 samples")
    med = float(np.median(_pair_values(1.0 - Z @ Z.T)))
    return max(med, floor)


def rbf_median_bandwidth(X, floor: float = DEFAULT_BANDWIDTH_FLOOR) -> float:
    """Median of pairwise squared Euclidean distances over distinct pairs."""
    if floor <= 0:
        raise ValueError(f"floor must be positive, got {floor}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("median bandwidth needs at least 2 samples")
    med = float(np.median(_pair_values(_sq_dists(X))))
    return max(med, floor)


def _sq_dists(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    return np.clip(d2, 0.0, None)


def resolve_bandwidth(X: np.ndarray, kernel: KernelSpec) -> float:
    if kernel.bandwidth_mode == FIXED:
        return float(kernel.bandwidth)
    if kernel.family == VMF:
        return median_bandwidth(X, kernel.bandwidth_floor)
    return rbf_median_bandwidth(X, kernel.bandwidth_floor)


def gram(X, kernel: KernelSpec) -> GramMatrix:
    """M x M Gram matrix K_ij = k(x_i, x_j) with the resolved bandwidth recorded."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"expected a nonempty (M, d) array, got shape {X.shape}")
    bw = resolve_bandwidth(X, kernel)
    if kernel.family == VMF:
        X = require_unit_rows(X)
        K = np.exp((X @ X.T) / bw)
    else:
        K = np.exp(-_sq_dists(X) / (2.0 * bw))
    K = 0.5 * (K + K.T)  # kill last-ulp matmul asymmetry
    return GramMatrix(values=K, kernel=kernel, resolved_bandwidth=bw)


def gram_grad_sum(X, kernel: KernelSpec, gram_matrix: GramMatrix | None = None) -> np.ndarray:
    """B[i, j] = (1/M) sum_m d k(x_i, x_m) / d (x_m)_j, an (M, d) array.

    vmf: d k(z_i, z_m)/d z_m = k(z_i, z_m) z_i / delta
    rbf: d k(x_i, x_m)/d x_m = k(x_i, x_m) (x_i - x_m) / sigma2
    """
    X = np.asarray(X, dtype=float)
    g = gram_matrix if gram_matrix is not None else gram(X, kernel)
    K, bw = g.values, g.resolved_bandwidth
    M = X.shape[0]
    if kernel.family == VMF:
        return (K.sum(axis=1)[:, None] * X) / (M * bw)
    return (K.sum(axis=1)[:, None] * X - K @ X) / (M * bw)
