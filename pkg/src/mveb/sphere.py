"""Unit-sphere geometry and the von Mises-Fisher (vMF) distribution.

The vMF density on the unit sphere S^{d-1} in R^d is

    p(z | mu, kappa) = C_d(kappa) * exp(kappa * mu . z),
    C_d(kappa) = kappa^{d/2 - 1} / ((2 pi)^{d/2} * I_{d/2 - 1}(kappa)),

with unit mean direction mu, concentration kappa >= 0 and I_nu the modified
Bessel function of the first kind. kappa = 0 is the uniform distribution,
density 1 / area(S^{d-1}).

This module is the exact oracle for the score-estimation stack: closed-form
log densities, exact samples via Wood's (1994) rejection scheme, and both the
ambient score kappa*mu and its tangential projection kappa*(I - z z^T)*mu.
The Bessel normalizer is computed in-house (log-space power series for small
arguments, Hankel large-argument expansion otherwise) so tests can bound the
error of either branch independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "normalize",
    "normalize_rows",
    "require_unit_rows",
    "log_surface_area",
    "log_bessel_iv",
    "vmf_log_normalizer",
    "VmfDistribution",
    "vmf_log_density",
    "vmf_sample",
    "vmf_ambient_score",
    "vmf_tangential_score",
    "mean_resultant_length",
    "uniform_sphere",
]

UNIT_NORM_ATOL = 1e-6


def normalize(x) -> np.ndarray:
    """Project a single vector onto the unit sphere. Zero vectors are an error."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {x.shape}")
    n = float(np.linalg.norm(x))
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return x / n


def normalize_rows(X) -> np.ndarray:
    """Row-wise unit normalization of an (M, d) array."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected an (M, d) array, got shape {X.shape}")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("cannot normalize a zero row")
    return X / norms[:, None]


def require_unit_rows(Z, atol: float = UNIT_NORM_ATOL) -> np.ndarray:
    """Validate that every row of Z lies on the unit sphere (within atol)."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    norms = np.linalg.norm(Z, axis=1)
    bad = np.abs(norms - 1.0) > atol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"row {i} is not unit-norm (|z| = {norms[i]!r})")
    return Z


def log_surface_area(d: int) -> float:
    """log area(S^{d-1}) = log(2 pi^{d/2} / Gamma(d/2)) for ambient dimension d >= 2."""
    if d < 2:
        raise ValueError(f"sphere dimension must satisfy d >= 2, got {d}")
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d)


def _log_iv_series(nu: float, x: float) -> float:
    # I_nu(x) = sum_k (x/2)^{2k+nu} / (k! Gamma(k+nu+1)), accumulated in log
    # space with an online log-sum-exp; valid for any x, cost O(x) terms.
    log_half_x = math.log(0.5 * x)
    # term magnitude peaks near k* solving k(k+nu) = (x/2)^2
    k_peak = 0.5 * (-(nu + 1.0) + math.sqrt((nu + 1.0) ** 2 + x * x))
    m = -math.inf
    s = 0.0
    k = 0
    while True:
        lt = (2 * k + nu) * log_half_x - math.lgamma(k + 1.0) - math.lgamma(k + nu + 1.0)
        if lt > m:
            s = s * math.exp(m - lt) + 1.0
            m = lt
        else:
            s += math.exp(lt - m)
        if k > k_peak and lt < m - 40.0:
            break
        k += 1
        if k > 100_000:  # unreachable for sane arguments
            raise RuntimeError("Bessel series failed to converge")
    return m + math.log(s)


def _log_iv_asymptotic(nu: float, x: float) -> float:
    # Hankel expansion: I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k / x^k,
    # a_k = prod_{j<=k} (4 nu^2 - (2j-1)^2) / (k! 8^k). Truncated at the
    # smallest term; adequate once x >> nu^2.
    mu4 = 4.0 * nu * nu
    total = 1.0
    term = 1.0
    prev_abs = math.inf
    for k in range(1, 60):
        term *= -(mu4 - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(term) >= prev_abs:
            break  # divergent tail reached
        total += term
        prev_abs = abs(term)
        if abs(term) < 1e-18:
            break
    if total <= 0.0:
        raise ValueError(f"asymptotic expansion invalid for nu={nu}, x={x}")
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(total)


def log_bessel_iv(nu: float, x: float, method: str = "auto") -> float:
    """log I_nu(x) for nu >= 0, x >= 0.

    method: "auto" picks the series for x < 50 or x < 4 nu^2 (where the
    large-argument expansion is not yet accurate) and the asymptotic branch
    otherwise; "series" / "asymptotic" force a branch for error bounding.
    """
    if nu < 0:
        raise ValueError(f"order must be nonnegative, got {nu}")
    if x < 0:
        raise ValueError(f"argument must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    if method == "series":
        return _log_iv_series(nu, x)
    if method == "asymptotic":
        return _log_iv_asymptotic(nu, x)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if x < 50.0 or x < 4.0 * nu * nu:
        return _log_iv_series(nu, x)
    return _log_iv_asymptotic(nu, x)


def vmf_log_normalizer(d: int, kappa: float) -> float:
    """log C_d(kappa); reduces to -log area(S^{d-1}) at kappa = 0."""
    if d < 2:
        raise ValueError(f"dimension must satisfy d >= 2, got {d}")
    if kappa < 0:
        raise ValueError(f"concentration must be nonnegative, got {kappa}")
    if kappa == 0.0:
        return -log_surface_area(d)
    nu = 0.5 * d - 1.0
    return nu * math.log(kappa) - 0.5 * d * math.log(2.0 * math.pi) - log_bessel_iv(nu, kappa)


@dataclass(frozen=True)
class VmfDistribution:
    """vMF distribution with unit mean direction mu and concentration kappa >= 0."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or mu.shape[0] < 2:
            raise ValueError(f"mu must be a vector of dimension >= 2, got shape {mu.shape}")
        if abs(float(np.linalg.norm(mu)) - 1.0) > UNIT_NORM_ATOL:
            raise ValueError("mu must be a unit vector")
        if self.kappa < 0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def vmf_log_density(z, q: VmfDistribution) -> float:
    """log p(z | mu, kappa) = log C_d(kappa) + kappa * mu . z.

    Evaluates the smooth ambient extension of the density (no unit-norm check
    on z), so finite differences off the sphere are well defined.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (q.dim,):
        raise ValueError(f"dimension mismatch: z has shape {z.shape}, expected ({q.dim},)")
    return vmf_log_normalizer(q.dim, q.kappa) + q.kappa * float(q.mu @ z)


def _sample_weights(kappa: float, d: int, m: int, rng: np.random.Generator) -> np.ndarray:
    # Wood (1994) rejection sampler for the mu-component w = mu . z.
    dm = d - 1
    b = dm / (math.sqrt(4.0 * kappa * kappa + dm * dm) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dm * math.log(1.0 - x0 * x0)
    out = np.empty(m)
    filled = 0
    while filled < m:
        n = m - filled
        z = rng.beta(0.5 * dm, 0.5 * dm, size=n)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=n)
        accept = kappa * w + dm * np.log1p(-x0 * w) - c >= np.log(u)
        k = int(accept.sum())
        out[filled : filled + k] = w[accept]
        filled += k
    return out


def vmf_sample(q: VmfDistribution, rng: np.random.Generator, m: int) -> np.ndarray:
    """m i.i.d. draws from q, returned as an (m, d) array of unit rows."""
    if m < 1:
        raise ValueError(f"sample count must be positive, got {m}")
    d = q.dim
    if q.kappa == 0.0:
        return normalize_rows(rng.standard_normal((m, d)))
    w = _sample_weights(q.kappa, d, m, rng)
    # uniform tangent directions orthogonal to mu
    t = rng.standard_normal((m, d))
    t -= np.outer(t @ q.mu, q.mu)
    t = normalize_rows(t)
    z = w[:, None] * q.mu[None, :] + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * t
    return normalize_rows(z)


def vmf_ambient_score(z, q: VmfDistribution) -> np.ndarray:
    """Ambient-coordinate gradient of the log density: constant kappa * mu."""
    z = np.asarray(z, dtype=float)
    if z.shape != (q.dim,):
        raise ValueError(f"dimension mismatch: z has shape {z.shape}, expected ({q.dim},)")
    return q.kappa * q.mu


def vmf_tangential_score(z, q: VmfDistribution) -> np.ndarray:
    """Tangential score kappa * (I - z z^T) mu at a point z on the sphere."""
    z = np.asarray(z, dtype=float)
    if z.shape != (q.dim,):
        raise ValueError(f"dimension mismatch: z has shape {z.shape}, expected ({q.dim},)")
    return q.kappa * (q.mu - float(z @ q.mu) * z)


def mean_resultant_length(d: int, kappa: float) -> float:
    """A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa), the expected resultant length."""
    if kappa < 0:
        raise ValueError(f"concentration must be nonnegative, got {kappa}")
    if kappa == 0.0:
        return 0.0
    return math.exp(log_bessel_iv(0.5 * d, kappa) - log_bessel_iv(0.5 * d - 1.0, kappa))


def uniform_sphere(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    """m uniform draws on S^{d-1}."""
    if d < 2:
        raise ValueError(f"sphere dimension must satisfy d >= 2, got {d}")
    return normalize_rows(rng.standard_normal((m, d)))
