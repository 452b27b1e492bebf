"""Training objectives: the entropy-bottleneck loss and two baselines.

The main objective, minimized over encoder parameters, is

    total = -alignment(Z1, Z2) + 0.5 * beta * (surr(Z1, S1) + surr(Z2, S2)),

where alignment is the mean inner product of paired unit embeddings and the
entropy surrogates carry the (detached) estimated scores. Minimizing total
maximizes view agreement and the differential entropy of each branch.

Baselines: InfoNCE with its large-batch limit decomposition, and the unified
decorrelation form -alignment + lambda * mean_i z_i^T F z_i with F the batch
feature correlation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .entropy import entropy_surrogate
from .sphere import require_unit_rows

__all__ = [
    "LossTerms",
    "BaselineConfig",
    "alignment",
    "mveb_loss",
    "infonce_loss",
    "infonce_grads",
    "InfoNceLimitTerms",
    "infonce_limit_terms",
    "decorrelation_loss",
    "decorrelation_grads",
]


@dataclass(frozen=True)
class LossTerms:
    alignment: float
    entropy_surr_1: float
    entropy_surr_2: float
    total: float
    beta: float


@dataclass(frozen=True)
class BaselineConfig:
    temperature: float = 0.5
    decorrelation_lambda: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.decorrelation_lambda < 0:
            raise ValueError("decorrelation_lambda must be nonnegative")


def _paired(Z1, Z2):
    Z1 = require_unit_rows(Z1)
    Z2 = require_unit_rows(Z2)
    if Z1.shape != Z2.shape:
        raise ValueError(f"paired batches must match: {Z1.shape} vs {Z2.shape}")
    return Z1, Z2


def alignment(Z1, Z2) -> float:
    """Mean inner product over positive pairs (row i of Z1 with row i of Z2)."""
    Z1, Z2 = _paired(Z1, Z2)
    return float(np.mean(np.sum(Z1 * Z2, axis=1)))


def mveb_loss(Z1, Z2, S1, S2, beta: float) -> LossTerms:
    """Alignment plus beta-weighted entropy surrogates, all components reported."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    a = alignment(Z1, Z2)
    e1 = entropy_surrogate(Z1, S1).value
    e2 = entropy_surrogate(Z2, S2).value
    total = -a + 0.5 * beta * (e1 + e2)
    return LossTerms(alignment=a, entropy_surr_1=e1, entropy_surr_2=e2, total=total, beta=beta)


def infonce_loss(Z1, Z2, tau: float) -> float:
    """Contrastive loss with in-batch negatives.

    mean_i -log( exp(z1_i . z2_i / tau) / sum_j exp(z1_i . z2_j / tau) ),
    the positive included in the denominator.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    Z1, Z2 = _paired(Z1, Z2)
    if Z1.shape[0] < 2:
        raise ValueError("contrastive loss needs at least 2 samples")
    logits = (Z1 @ Z2.T) / tau
    return float(np.mean(logsumexp(logits, axis=1) - np.diag(logits)))


def infonce_grads(Z1, Z2, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of infonce_loss with respect to both embedding batches."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    Z1, Z2 = _paired(Z1, Z2)
    M = Z1.shape[0]
    logits = (Z1 @ Z2.T) / tau
    P = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
    dlogits = (P - np.eye(M)) / (M * tau)
    return dlogits @ Z2, dlogits.T @ Z1


@dataclass(frozen=True)
class InfoNceLimitTerms:
    aligned: float
    lse: float


def infonce_limit_terms(Z1, Z2, negatives, tau: float, block: int = 256) -> InfoNceLimitTerms:
    """Both terms of the large-batch limit of the contrastive loss.

    aligned = -(1/tau) * mean positive-pair inner product;
    lse = mean over anchors z of log mean over negatives z^- of exp(z^- . z / tau).
    Anchors are processed in blocks so large negative pools stay in memory.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    Z1, Z2 = _paired(Z1, Z2)
    negatives = require_unit_rows(negatives)
    if negatives.shape[0] < 1:
        raise ValueError("need at least one negative sample")
    aligned = -alignment(Z1, Z2) / tau
    n_neg = negatives.shape[0]
    lse_sum = 0.0
    for start in range(0, Z1.shape[0], block):
        chunk = Z1[start : start + block]
        logits = (chunk @ negatives.T) / tau
        lse_sum += float(np.sum(logsumexp(logits, axis=1) - np.log(n_neg)))
    return InfoNceLimitTerms(aligned=aligned, lse=lse_sum / Z1.shape[0])


def decorrelation_loss(Z1, Z2, lam: float) -> float:
    """-alignment + lam * mean_i z1_i^T F z1_i with F = (1/M) Z1^T Z1."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    Z1, Z2 = _paired(Z1, Z2)
    M = Z1.shape[0]
    G = Z1 @ Z1.T
    quad = float(np.sum(G * G)) / (M * M)
    return -alignment(Z1, Z2) + lam * quad


def decorrelation_grads(Z1, Z2, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of decorrelation_loss, with F differentiated through the batch."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    Z1, Z2 = _paired(Z1, Z2)
    M = Z1.shape[0]
    G = Z1 @ Z1.T
    dZ1 = -Z2 / M + lam * (4.0 / (M * M)) * (G @ Z1)
    dZ2 = -Z1 / M
    return dZ1, dZ2
