"""Score-based surrogate for the gradient of differential entropy.

For z = f_phi(v) with v ~ p(v), the entropy gradient decomposes as

    grad_phi H(z) = -E_v[ S(z) grad_phi f_phi(v) ],   S(z) = grad_z log q(z),

with the score S treated as a constant (detached) during differentiation.
The batch surrogate

    value = (1/M) sum_i S_i . z_i

therefore has parameter gradient (1/M) sum_i S_i dz_i/dphi, an estimate of
-grad_phi H(z). Adding +beta * value to a minimized loss maximizes entropy.

The linear-Gaussian family z = A v, v ~ N(0, I) has closed-form entropy
H = (d/2) log(2 pi e) + log|det A| and grad_A H = A^{-T}; it is the oracle
used to validate the whole chain. The gradient check standardizes the drawn
batch to exact empirical mean 0 / covariance I so that with analytic scores
the chain is exact up to roundoff and any residual error is attributable to
the score estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np
import scipy.linalg

from .stein import ScoreMatrix, SteinConfig, stein_estimate

__all__ = [
    "EntropySurrogate",
    "entropy_surrogate",
    "entropy_surrogate_grad",
    "LinearGaussianEntropy",
    "analytic_entropy_linear_gaussian",
    "EntropyGradCheck",
    "entropy_grad_check",
    "whiten",
]

STEIN = "stein"
ANALYTIC = "analytic_oracle"


@dataclass(frozen=True)
class EntropySurrogate:
    value: float
    score_source: str
    detached: bool = True

    def __post_init__(self):
        if self.score_source not in (STEIN, ANALYTIC):
            raise ValueError(f"unknown score source {self.score_source!r}")
        if not self.detached:
            raise ValueError("entropy surrogate requires detached scores")


def _score_values(S) -> np.ndarray:
    return S.values if isinstance(S, ScoreMatrix) else np.asarray(S, dtype=float)


def entropy_surrogate(Z, S, score_source: str = STEIN) -> EntropySurrogate:
    """(1/M) sum_i S_i . z_i with S held constant.

    S may be a ScoreMatrix or a plain array; either way it enters as data, so
    the only gradient path of the value is through Z.
    """
    Z = np.asarray(Z, dtype=float)
    Sv = _score_values(S)
    if Z.shape != Sv.shape:
        raise ValueError(f"shape mismatch: embeddings {Z.shape} vs scores {Sv.shape}")
    value = float(np.mean(np.sum(Sv * Z, axis=1)))
    return EntropySurrogate(value=value, score_source=score_source)


def entropy_surrogate_grad(S, batch_size: int) -> np.ndarray:
    """d(surrogate value)/dZ = S / M, the upstream gradient fed to the encoder."""
    Sv = _score_values(S)
    if batch_size != Sv.shape[0]:
        raise ValueError(f"batch size {batch_size} does not match score rows {Sv.shape[0]}")
    return Sv / batch_size


@dataclass(frozen=True)
class LinearGaussianEntropy:
    entropy: float
    grad: np.ndarray


def analytic_entropy_linear_gaussian(A) -> LinearGaussianEntropy:
    """Entropy of z = A v, v ~ N(0, I), and its gradient in A.

    H = (d/2) log(2 pi e) + log|det A|,  dH/dA = (A^{-1})^T.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    sign, logabsdet = np.linalg.slogdet(A)
    if sign == 0:
        raise ValueError("A is singular")
    d = A.shape[0]
    entropy = 0.5 * d * math.log(2.0 * math.pi * math.e) + logabsdet
    grad = np.linalg.inv(A).T
    return LinearGaussianEntropy(entropy=entropy, grad=grad)


def whiten(V: np.ndarray) -> np.ndarray:
    """Affinely standardize rows of V to exact empirical mean 0, covariance I."""
    V = np.asarray(V, dtype=float)
    M, d = V.shape
    if M <= d:
        raise ValueError(f"need more samples than dimensions to whiten ({M} <= {d})")
    Vc = V - V.mean(axis=0)
    C = (Vc.T @ Vc) / M
    L = np.linalg.cholesky(C)
    return scipy.linalg.solve_triangular(L, Vc.T, lower=True, check_finite=False).T


@dataclass(frozen=True)
class EntropyGradCheck:
    relative_error: float
    surrogate_grad: np.ndarray
    target_grad: np.ndarray


def entropy_grad_check(
    A,
    m: int,
    cfg: SteinConfig,
    rng: np.random.Generator,
    score_source: str = STEIN,
) -> EntropyGradCheck:
    """Run the full chain v -> z = A v -> scores -> surrogate -> dA and compare.

    The surrogate's A-gradient (1/M) sum_i S_i v_i^T is compared against the
    negated analytic entropy gradient -A^{-T} (the surrogate estimates -H as
    far as gradients are concerned). Returns the relative Frobenius error.
    """
    A = np.asarray(A, dtype=float)
    oracle = analytic_entropy_linear_gaussian(A)
    V = whiten(rng.standard_normal((m, A.shape[0])))
    Z = V @ A.T
    if score_source == ANALYTIC:
        S = -Z @ np.linalg.inv(A @ A.T)  # score of N(0, A A^T) at each row
    elif score_source == STEIN:
        S = stein_estimate(Z, cfg).values
    else:
        raise ValueError(f"unknown score source {score_source!r}")
    surrogate_grad = (S.T @ V) / m
    target = -oracle.grad
    rel = float(np.linalg.norm(surrogate_grad - target) / np.linalg.norm(target))
    return EntropyGradCheck(relative_error=rel, surrogate_grad=surrogate_grad, target_grad=target)
