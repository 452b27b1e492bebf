"""Exact information theory over small finite joint distributions.

Everything is brute force in nats: entropies by direct summation over
marginals, mutual information assembled from entropies, and the identity
checks the continuous derivation leans on, each returning lhs/rhs/gap so a
test can pin the gap at float precision:

    I(z; v1 | v2) = H(z | v2) - H(z | v1, v2)
    I(z; v)       = H(z) - H(z | v)
    E_{p(v2)} KL(p(z|v2) || q(z|v2))
                  = E_{p(z,v2)}[log p(z|v2)] - E_{p(z,v2)}[log q(z|v2)]
    H(z | v2)    <= -E_{p(z,v2)}[log q(z|v2)]   (equality iff q = p)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiscreteJoint",
    "random_joint",
    "entropy",
    "conditional_entropy",
    "mutual_info",
    "conditional_mutual_info",
    "DecompositionCheck",
    "verify_cond_mi_decomposition",
    "verify_mi_decomposition",
    "KlDecompositionCheck",
    "verify_kl_decomposition",
    "BoundCheck",
    "variational_bound_check",
]

MASS_ATOL = 1e-12


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint pmf over named axes; entries >= 0 and total mass 1 within 1e-12."""

    probs: np.ndarray
    axes: tuple[str, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        axes = tuple(self.axes)
        if p.ndim != len(axes):
            raise ValueError(f"{p.ndim}-d table with {len(axes)} axis names")
        if len(set(axes)) != len(axes):
            raise ValueError("axis names must be unique")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(p.sum()) - 1.0) > MASS_ATOL:
            raise ValueError(f"total mass is {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "axes", axes)

    def axis_ids(self, names) -> tuple[int, ...]:
        names = (names,) if isinstance(names, str) else tuple(names)
        try:
            return tuple(self.axes.index(n) for n in names)
        except ValueError:
            raise ValueError(f"unknown axis in {names!r}; have {self.axes}") from None

    def marginal(self, names) -> np.ndarray:
        keep = self.axis_ids(names)
        drop = tuple(i for i in range(len(self.axes)) if i not in keep)
        m = self.probs.sum(axis=drop) if drop else self.probs
        # restore requested axis order
        order = tuple(sorted(range(len(keep)), key=lambda i: keep[i]))
        inv = tuple(order.index(i) for i in range(len(keep)))
        return np.transpose(m, inv)


def random_joint(rng: np.random.Generator, shape, axes) -> DiscreteJoint:
    """Full-support random joint: normalized i.i.d. exponential draws."""
    p = rng.exponential(size=shape)
    return DiscreteJoint(probs=p / p.sum(), axes=tuple(axes))


def _plogp_sum(p: np.ndarray) -> float:
    # 0 log 0 := 0
    pos = p[p > 0]
    return float(np.sum(pos * np.log(pos)))


def entropy(j: DiscreteJoint, axes) -> float:
    """Shannon entropy (nats) of the marginal on the given axes."""
    return -_plogp_sum(j.marginal(axes))


def _as_names(j: DiscreteJoint, axes) -> tuple[str, ...]:
    return (axes,) if isinstance(axes, str) else tuple(axes)


def _check_disjoint(j: DiscreteJoint, a, b):
    a, b = _as_names(j, a), _as_names(j, b)
    if set(a) & set(b):
        raise ValueError(f"axis sets must be disjoint: {a} vs {b}")
    return a, b


def conditional_entropy(j: DiscreteJoint, target_axes, given_axes) -> float:
    """H(T | G) = H(T, G) - H(G); empty G gives the plain entropy.

    Computed as -sum p(t, g) (log p(t, g) - log p(g)) with p(g) reduced from
    the same table, so a point-mass conditional yields exactly 0.
    """
    t, g = _check_disjoint(j, target_axes, given_axes)
    if not g:
        return entropy(j, t)
    ptg = j.marginal(t + g)
    t_axes = tuple(range(len(t)))
    pg = ptg.sum(axis=t_axes)
    mask = ptg > 0
    ratio_logs = np.log(ptg[mask]) - np.log(np.broadcast_to(pg, ptg.shape)[mask])
    return -float(np.sum(ptg[mask] * ratio_logs))


def mutual_info(j: DiscreteJoint, axes_a, axes_b) -> float:
    """I(A; B) = H(A) + H(B) - H(A, B)."""
    a, b = _check_disjoint(j, axes_a, axes_b)
    return entropy(j, a) + entropy(j, b) - entropy(j, a + b)


def conditional_mutual_info(j: DiscreteJoint, axes_a, axes_b, given_axes) -> float:
    """I(A; B | C) = H(A | C) - H(A | B, C)."""
    a, b = _check_disjoint(j, axes_a, axes_b)
    _, c = _check_disjoint(j, a, given_axes)
    _check_disjoint(j, b, c)
    return conditional_entropy(j, a, c) - conditional_entropy(j, a, b + c)


@dataclass(frozen=True)
class DecompositionCheck:
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def verify_cond_mi_decomposition(j: DiscreteJoint) -> DecompositionCheck:
    """I(z; v1 | v2) against H(z|v2) - H(z|v1,v2) on a 3-axis joint (z, v1, v2)."""
    if len(j.axes) != 3:
        raise ValueError(f"expected a 3-axis joint, got axes {j.axes}")
    z, v1, v2 = j.axes
    lhs = conditional_mutual_info(j, z, v1, v2)
    rhs = conditional_entropy(j, z, v2) - conditional_entropy(j, z, (v1, v2))
    return DecompositionCheck(lhs=lhs, rhs=rhs)


def verify_mi_decomposition(j: DiscreteJoint) -> DecompositionCheck:
    """I(z; v) against H(z) - H(z|v) on a 2-axis joint (z, v)."""
    if len(j.axes) != 2:
        raise ValueError(f"expected a 2-axis joint, got axes {j.axes}")
    z, v = j.axes
    lhs = mutual_info(j, z, v)
    rhs = entropy(j, z) - conditional_entropy(j, z, v)
    return DecompositionCheck(lhs=lhs, rhs=rhs)


def _conditional_tables(p: DiscreteJoint, q_cond: np.ndarray):
    # p over (z, v2) as probs[z, v2]; q_cond[v2, z] rows are distributions in z
    if len(p.axes) != 2:
        raise ValueError(f"expected a 2-axis joint, got axes {p.axes}")
    q = np.asarray(q_cond, dtype=float)
    nz, nv = p.probs.shape
    if q.shape != (nv, nz):
        raise ValueError(f"q_cond must have shape ({nv}, {nz}), got {q.shape}")
    if np.any(q < 0) or np.any(np.abs(q.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("q_cond rows must be distributions over z")
    if np.any((p.probs > 0) & (q.T <= 0)):
        raise ValueError("q_cond has zero mass where p does not (KL infinite)")
    return q


def _support_logs(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = np.log(q[mask])
    return out


@dataclass(frozen=True)
class KlDecompositionCheck:
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def verify_kl_decomposition(p: DiscreteJoint, q_cond) -> KlDecompositionCheck:
    """Average conditional KL against the cross-entropy-minus-entropy form."""
    q = _conditional_tables(p, q_cond)
    pv = p.probs.sum(axis=0)  # p(v2)
    lhs = 0.0
    for v in range(pv.size):
        if pv[v] == 0:
            continue
        pz = p.probs[:, v] / pv[v]
        mask = pz > 0
        lhs += pv[v] * float(np.sum(pz[mask] * (np.log(pz[mask]) - np.log(q[v, mask]))))
    p_cond = np.where(pv[None, :] > 0, p.probs / np.where(pv[None, :] > 0, pv[None, :], 1.0), 0.0)
    e_log_p = float(np.sum(p.probs * _support_logs(p.probs, p_cond)))
    e_log_q = float(np.sum(p.probs * _support_logs(p.probs, q.T)))
    return KlDecompositionCheck(lhs=lhs, rhs=e_log_p - e_log_q)


@dataclass(frozen=True)
class BoundCheck:
    cond_entropy: float
    cross_entropy: float

    @property
    def slack(self) -> float:
        return self.cross_entropy - self.cond_entropy


def variational_bound_check(p: DiscreteJoint, q_cond) -> BoundCheck:
    """H(z|v2) and the variational cross-entropy -E_p[log q(z|v2)].

    The bound H(z|v2) <= cross_entropy holds for any valid q, with equality
    exactly when the KL decomposition gap vanishes (q = p on the support).
    """
    q = _conditional_tables(p, q_cond)
    z_axis, v2_axis = p.axes
    h = conditional_entropy(p, z_axis, v2_axis)
    cross = -float(np.sum(p.probs * _support_logs(p.probs, q.T)))
    return BoundCheck(cond_entropy=h, cross_entropy=cross)
