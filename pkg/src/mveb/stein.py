"""Stein gradient estimator: nonparametric score estimation from samples.

Given M i.i.d. samples x^1..x^M of an unknown density q, the estimator solves
the kernel ridge regression implied by Stein's identity and returns

    G_hat = -M (K + eta I)^{-1} B,

where K is the Gram matrix and B[i, j] = (1/M) sum_m d k(x_i, x_m)/d(x_m)_j.
Row i of G_hat estimates the score grad_x log q at x^i. The derivation
assumes the kernel is in the Stein class of q (the boundary term of the
integration by parts vanishes); this is not verifiable for an implicit q and
is treated as an assumption, not enforced.

The linear system is solved through a Cholesky factorization of K + eta I;
a factorization failure is raised as-is, never papered over with extra
regularization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernels import KernelSpec, gram, gram_grad_sum

__all__ = ["SteinConfig", "ScoreMatrix", "SteinFactorizationError", "stein_estimate", "score_error"]

DEFAULT_RIDGE_ETA = 0.1


class SteinFactorizationError(RuntimeError):
    """Cholesky factorization of K + eta I failed."""


@dataclass(frozen=True)
class SteinConfig:
    kernel: KernelSpec
    ridge_eta: float = DEFAULT_RIDGE_ETA

    def __post_init__(self):
        if self.ridge_eta <= 0:
            raise ValueError(f"ridge_eta must be positive, got {self.ridge_eta}")


@dataclass(frozen=True)
class ScoreMatrix:
    """Estimated scores, one row per sample, plus how they were produced."""

    values: np.ndarray
    resolved_bandwidth: float
    ridge_eta: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"scores must be an (M, d) array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("score matrix contains non-finite entries")
        object.__setattr__(self, "values", v)


def stein_estimate(X, cfg: SteinConfig) -> ScoreMatrix:
    """Estimate per-sample scores of the implicit density behind the batch X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"expected a nonempty (M, d) sample array, got shape {X.shape}")
    g = gram(X, cfg.kernel)
    B = gram_grad_sum(X, cfg.kernel, gram_matrix=g)
    M = X.shape[0]
    A = g.values + cfg.ridge_eta * np.eye(M)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise SteinFactorizationError(
            f"Cholesky of K + eta I failed (M={M}, eta={cfg.ridge_eta}, "
            f"bandwidth={g.resolved_bandwidth!r}): {e}"
        ) from e
    S = -M * scipy.linalg.cho_solve(factor, B, check_finite=False)
    return ScoreMatrix(values=S, resolved_bandwidth=g.resolved_bandwidth, ridge_eta=cfg.ridge_eta)


@dataclass(frozen=True)
class ScoreErrorReport:
    mse: float
    mean_cosine: float
    skipped_rows: int


def score_error(est, truth) -> ScoreErrorReport:
    """Entrywise MSE and mean row-cosine between estimated and true scores.

    Rows whose true score has zero norm are skipped from the cosine average
    and counted; an estimated zero row against a nonzero truth scores 0.
    """
    e = est.values if isinstance(est, ScoreMatrix) else np.asarray(est, dtype=float)
    t = np.asarray(truth, dtype=float)
    if e.shape != t.shape:
        raise ValueError(f"shape mismatch: {e.shape} vs {t.shape}")
    mse = float(np.mean((e - t) ** 2))
    tn = np.linalg.norm(t, axis=1)
    en = np.linalg.norm(e, axis=1)
    keep = tn > 0
    skipped = int(np.sum(~keep))
    if not np.any(keep):
        return ScoreErrorReport(mse=mse, mean_cosine=float("nan"), skipped_rows=skipped)
    dots = np.sum(e[keep] * t[keep], axis=1)
    denom = en[keep] * tn[keep]
    cos = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
    return ScoreErrorReport(mse=mse, mean_cosine=float(np.mean(cos)), skipped_rows=skipped)
