import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mveb.kernels import KernelSpec
from mveb.losses import (
    BaselineConfig,
    alignment,
    decorrelation_grads,
    decorrelation_loss,
    infonce_grads,
    infonce_limit_terms,
    infonce_loss,
    mveb_loss,
)
from mveb.sphere import normalize_rows, uniform_sphere
from mveb.stein import SteinConfig, stein_estimate


class TestAlignment:
    def test_identical(self):
        Z = uniform_sphere(np.random.default_rng(0), 6, 4)
        assert alignment(Z, Z) == pytest.approx(1.0, abs=1e-12)

    def test_antipodal(self):
        Z = uniform_sphere(np.random.default_rng(1), 6, 4)
        assert alignment(Z, -Z) == pytest.approx(-1.0, abs=1e-12)

    def test_orthogonal_pairs(self):
        Z1 = np.tile(np.array([1.0, 0.0]), (3, 1))
        Z2 = np.tile(np.array([0.0, 1.0]), (3, 1))
        assert alignment(Z1, Z2) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            alignment(np.eye(2), np.eye(3))

    def test_permutation_equivariant_in_paired_rows(self):
        rng = np.random.default_rng(13)
        Z1, Z2 = uniform_sphere(rng, 10, 4), uniform_sphere(rng, 10, 4)
        perm = rng.permutation(10)
        assert alignment(Z1[perm], Z2[perm]) == pytest.approx(alignment(Z1, Z2), abs=1e-12)
        t0 = mveb_loss(Z1, Z2, np.zeros_like(Z1), np.zeros_like(Z2), beta=0.0)
        t1 = mveb_loss(Z1[perm], Z2[perm], np.zeros_like(Z1), np.zeros_like(Z2), beta=0.0)
        assert t1.total == pytest.approx(t0.total, abs=1e-12)


class TestMvebLoss:
    def test_beta_zero_reduces_to_alignment(self):
        rng = np.random.default_rng(2)
        Z1, Z2 = uniform_sphere(rng, 5, 3), uniform_sphere(rng, 5, 3)
        S = rng.standard_normal((5, 3))
        t = mveb_loss(Z1, Z2, S, S, beta=0.0)
        assert t.total == -t.alignment

    def test_arithmetic_example(self):
        Z1 = np.array([[1.0, 0.0], [0.0, 1.0]])
        Z2 = np.array([[1.0, 0.0], [1.0, 0.0]])
        t = mveb_loss(Z1, Z2, np.zeros((2, 2)), np.zeros((2, 2)), beta=0.01)
        assert t.alignment == pytest.approx(0.5)
        assert t.total == pytest.approx(-0.5)

    def test_matches_independent_recomputation_with_stein_scores(self):
        rng = np.random.default_rng(5)
        Z1, Z2 = uniform_sphere(rng, 16, 6), uniform_sphere(rng, 16, 6)
        cfg = SteinConfig(kernel=KernelSpec(family="vmf", bandwidth_mode="median_heuristic"))
        S1, S2 = stein_estimate(Z1, cfg), stein_estimate(Z2, cfg)
        t = mveb_loss(Z1, Z2, S1, S2, beta=0.01)
        align = np.mean(np.sum(Z1 * Z2, axis=1))
        e1 = np.mean(np.sum(S1.values * Z1, axis=1))
        e2 = np.mean(np.sum(S2.values * Z2, axis=1))
        assert t.total == pytest.approx(-align + 0.5 * 0.01 * (e1 + e2), abs=1e-12)

    def test_negative_beta_rejected(self):
        Z = uniform_sphere(np.random.default_rng(0), 4, 3)
        with pytest.raises(ValueError):
            mveb_loss(Z, Z, np.zeros_like(Z), np.zeros_like(Z), beta=-0.1)

    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_decomposition_identity(self, seed, beta):
        rng = np.random.default_rng(seed)
        Z1, Z2 = uniform_sphere(rng, 8, 4), uniform_sphere(rng, 8, 4)
        S1, S2 = rng.standard_normal((8, 4)), rng.standard_normal((8, 4))
        t = mveb_loss(Z1, Z2, S1, S2, beta=beta)
        assert abs(t.total - (-t.alignment + 0.5 * beta * (t.entropy_surr_1 + t.entropy_surr_2))) < 1e-12


class TestInfoNce:
    def test_two_pair_closed_form(self):
        Z = np.eye(2)
        loss = infonce_loss(Z, Z, tau=1.0)
        assert loss == pytest.approx(-math.log(math.e / (math.e + 1.0)), abs=1e-12)

    def test_identical_embeddings_give_log_m(self):
        Z = np.tile(normalize_rows(np.ones((1, 5))), (7, 1))
        assert infonce_loss(Z, Z, tau=0.3) == pytest.approx(math.log(7), abs=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(6)
        Z1, Z2 = uniform_sphere(rng, 9, 5), uniform_sphere(rng, 9, 5)
        tau = 0.4
        rows = []
        for i in range(9):
            logits = [float(Z1[i] @ Z2[j]) / tau for j in range(9)]
            rows.append(-logits[i] + math.log(sum(math.exp(v) for v in logits)))
        assert infonce_loss(Z1, Z2, tau) == pytest.approx(np.mean(rows), abs=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            Z1, Z2 = uniform_sphere(rng, 6, 4), uniform_sphere(rng, 6, 4)
            assert infonce_loss(Z1, Z2, 0.5) >= 0.0

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            infonce_loss(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]]), 1.0)

    def test_grads_match_finite_differences(self):
        rng = np.random.default_rng(8)
        Z1, Z2 = uniform_sphere(rng, 5, 3), uniform_sphere(rng, 5, 3)
        dZ1, dZ2 = infonce_grads(Z1, Z2, 0.7)
        h = 1e-7
        for Z, dZ, which in ((Z1, dZ1, 0), (Z2, dZ2, 1)):
            fd = np.zeros_like(Z)
            for i in range(5):
                for j in range(3):
                    Zp, Zm = Z.copy(), Z.copy()
                    Zp[i, j] += h
                    Zm[i, j] -= h
                    # evaluate the raw formula off-sphere via unnormalized inputs
                    args_p = (Zp, Z2) if which == 0 else (Z1, Zp)
                    args_m = (Zm, Z2) if which == 0 else (Z1, Zm)
                    lp = _infonce_raw(*args_p, 0.7)
                    lm = _infonce_raw(*args_m, 0.7)
                    fd[i, j] = (lp - lm) / (2 * h)
            np.testing.assert_allclose(fd, dZ, atol=1e-6)


def _infonce_raw(Z1, Z2, tau):
    logits = (Z1 @ Z2.T) / tau
    from scipy.special import logsumexp

    return float(np.mean(logsumexp(logits, axis=1) - np.diag(logits)))


class TestInfoNceLimitTerms:
    def test_orthogonal_negatives_zero_lse(self):
        Z1 = np.tile(np.array([1.0, 0.0, 0.0]), (4, 1))
        negs = np.tile(np.array([0.0, 1.0, 0.0]), (6, 1))
        lt = infonce_limit_terms(Z1, Z1, negs, tau=1.0)
        assert lt.lse == pytest.approx(0.0, abs=1e-12)

    def test_aligned_term(self):
        Z = uniform_sphere(np.random.default_rng(9), 8, 4)
        lt = infonce_limit_terms(Z, Z, Z, tau=2.0)
        assert lt.aligned == pytest.approx(-0.5, abs=1e-12)

    def test_empty_negatives_rejected(self):
        Z = uniform_sphere(np.random.default_rng(0), 3, 3)
        with pytest.raises(ValueError):
            infonce_limit_terms(Z, Z, np.zeros((0, 3)), 1.0)

    def test_blocked_equals_unblocked(self):
        rng = np.random.default_rng(10)
        Z = uniform_sphere(rng, 50, 4)
        negs = uniform_sphere(rng, 200, 4)
        a = infonce_limit_terms(Z, Z, negs, 0.5, block=7)
        b = infonce_limit_terms(Z, Z, negs, 0.5, block=500)
        assert a.lse == pytest.approx(b.lse, abs=1e-12)

    def test_gap_shrinks_with_batch_size(self):
        # light version of the convergence property: N = 8 vs 128
        tau, d = 0.25, 8
        rng = np.random.default_rng(99)
        anchors = uniform_sphere(rng, 256, d)
        negs = uniform_sphere(rng, 65536, d)
        lt = infonce_limit_terms(anchors, anchors, negs, tau)
        limit = lt.aligned + lt.lse
        gaps = {}
        for N in (8, 128):
            vals = []
            for seed in range(10):
                Z = uniform_sphere(np.random.default_rng(50 + seed), N, d)
                vals.append(infonce_loss(Z, Z, tau) - math.log(N) - limit)
            gaps[N] = abs(float(np.mean(vals)))
        assert gaps[128] < gaps[8]


class TestDecorrelation:
    def test_single_sample(self):
        Z = np.array([[1.0, 0.0]])
        assert decorrelation_loss(Z, Z, lam=1.0) == pytest.approx(0.0, abs=1e-12)

    def test_lambda_zero_is_alignment(self):
        rng = np.random.default_rng(11)
        Z1, Z2 = uniform_sphere(rng, 6, 4), uniform_sphere(rng, 6, 4)
        assert decorrelation_loss(Z1, Z2, 0.0) == pytest.approx(-alignment(Z1, Z2), abs=1e-15)

    def test_orthonormal_batch_quadratic_term(self):
        d = 5
        Z = np.eye(d)
        # F = I/d, so each z_i^T F z_i = 1/d
        assert decorrelation_loss(Z, Z, lam=1.0) == pytest.approx(-1.0 + 1.0 / d, abs=1e-12)

    def test_negative_lambda_rejected(self):
        Z = np.eye(2)
        with pytest.raises(ValueError):
            decorrelation_loss(Z, Z, -1.0)

    def test_grads_match_finite_differences(self):
        rng = np.random.default_rng(12)
        Z1, Z2 = uniform_sphere(rng, 4, 3), uniform_sphere(rng, 4, 3)
        lam = 0.8
        dZ1, dZ2 = decorrelation_grads(Z1, Z2, lam)
        h = 1e-7

        def raw(A, B):
            M = A.shape[0]
            G = A @ A.T
            return -float(np.mean(np.sum(A * B, axis=1))) + lam * float(np.sum(G * G)) / (M * M)

        for Z, dZ, which in ((Z1, dZ1, 0), (Z2, dZ2, 1)):
            fd = np.zeros_like(Z)
            for i in range(4):
                for j in range(3):
                    Zp, Zm = Z.copy(), Z.copy()
                    Zp[i, j] += h
                    Zm[i, j] -= h
                    lp = raw(Zp, Z2) if which == 0 else raw(Z1, Zp)
                    lm = raw(Zm, Z2) if which == 0 else raw(Z1, Zm)
                    fd[i, j] = (lp - lm) / (2 * h)
            np.testing.assert_allclose(fd, dZ, atol=1e-6)


def test_baseline_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(temperature=0.0)
    with pytest.raises(ValueError):
        BaselineConfig(decorrelation_lambda=-0.1)
