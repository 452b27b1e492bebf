import numpy as np
import pytest

from mveb.kernels import KernelSpec
from mveb.sphere import VmfDistribution, normalize, vmf_sample, vmf_tangential_score
from mveb.stein import ScoreMatrix, SteinConfig, score_error, stein_estimate

RBF_MEDIAN = SteinConfig(kernel=KernelSpec(family="rbf", bandwidth_mode="median_heuristic"), ridge_eta=0.1)
VMF_MEDIAN = SteinConfig(kernel=KernelSpec(family="vmf", bandwidth_mode="median_heuristic"), ridge_eta=0.1)


class TestSteinEstimate:
    def test_single_point_rbf_is_zero(self):
        cfg = SteinConfig(kernel=KernelSpec(family="rbf", bandwidth=1.0), ridge_eta=0.1)
        S = stein_estimate(np.array([[0.3, -0.7]]), cfg)
        np.testing.assert_array_equal(S.values, np.zeros((1, 2)))

    def test_huge_ridge_shrinks_to_ridge_limit(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((32, 3))
        eta = 1e9
        cfg = SteinConfig(kernel=KernelSpec(family="rbf", bandwidth=1.0), ridge_eta=eta)
        S = stein_estimate(X, cfg)
        from mveb.kernels import gram_grad_sum

        B = gram_grad_sum(X, cfg.kernel)
        np.testing.assert_allclose(S.values, -(32 / eta) * B, rtol=1e-4)
        assert np.abs(S.values).max() < 1e-6

    def test_gaussian_score_recovery(self):
        # analytic oracle: score of N(0, I) at x is -x
        rng = np.random.default_rng(0)
        X = rng.standard_normal((512, 8))
        rep = score_error(stein_estimate(X, RBF_MEDIAN), -X)
        assert rep.mean_cosine > 0.9

    def test_records_bandwidth_and_eta(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((16, 3))
        S = stein_estimate(X, RBF_MEDIAN)
        from mveb.kernels import rbf_median_bandwidth

        assert S.resolved_bandwidth == rbf_median_bandwidth(X)
        assert S.ridge_eta == 0.1

    def test_determinism_bitwise(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((64, 5))
        a = stein_estimate(X, RBF_MEDIAN).values
        b = stein_estimate(X.copy(), RBF_MEDIAN).values
        assert np.array_equal(a, b)

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((64, 5))
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        S = stein_estimate(X, RBF_MEDIAN).values
        S_rot = stein_estimate(X @ Q.T, RBF_MEDIAN).values
        np.testing.assert_allclose(S_rot, S @ Q.T, atol=1e-8)

    def test_consistency_trend_d4(self):
        m64, m512 = [], []
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            for M, acc in ((64, m64), (512, m512)):
                X = rng.standard_normal((M, 4))
                acc.append(score_error(stein_estimate(X, RBF_MEDIAN), -X).mse)
        assert np.mean(m512) < np.mean(m64)

    def test_vmf_kernel_tangential_correlation(self):
        # raw rows carry a radial shell component; only the tangential part
        # drives training, so compare after projecting it out
        q = VmfDistribution(mu=normalize(np.array([1.0, 1.0, 0.5])), kappa=4.0)
        cos = []
        for seed in range(10):
            Z = vmf_sample(q, np.random.default_rng(200 + seed), 512)
            S = stein_estimate(Z, VMF_MEDIAN).values
            S_tan = S - np.sum(S * Z, axis=1, keepdims=True) * Z
            T = np.array([vmf_tangential_score(z, q) for z in Z])
            cos.append(score_error(S_tan, T).mean_cosine)
        assert np.mean(cos) > 0.8

    def test_invalid_eta(self):
        with pytest.raises(ValueError):
            SteinConfig(kernel=KernelSpec(family="rbf", bandwidth=1.0), ridge_eta=0.0)

    def test_bad_input_shape(self):
        with pytest.raises(ValueError):
            stein_estimate(np.array([1.0, 2.0]), RBF_MEDIAN)


class TestScoreError:
    def test_exact_match(self):
        T = np.array([[1.0, 2.0], [3.0, -1.0]])
        rep = score_error(T, T)
        assert rep.mse == 0.0 and rep.mean_cosine == pytest.approx(1.0)

    def test_negated(self):
        T = np.array([[1.0, 2.0], [3.0, -1.0]])
        assert score_error(-T, T).mean_cosine == pytest.approx(-1.0)

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(3)
        E = rng.standard_normal((4, 3))
        T = rng.standard_normal((4, 3))
        rep = score_error(E, T)
        mse = float(np.mean((E - T) ** 2))
        cos = float(
            np.mean(
                [
                    E[i] @ T[i] / (np.linalg.norm(E[i]) * np.linalg.norm(T[i]))
                    for i in range(4)
                ]
            )
        )
        assert rep.mse == pytest.approx(mse, abs=1e-15)
        assert rep.mean_cosine == pytest.approx(cos, abs=1e-15)

    def test_zero_truth_rows_skipped_and_counted(self):
        E = np.array([[1.0, 0.0], [0.0, 1.0]])
        T = np.array([[0.0, 0.0], [0.0, 2.0]])
        rep = score_error(E, T)
        assert rep.skipped_rows == 1
        assert rep.mean_cosine == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            score_error(np.zeros((2, 2)), np.zeros((3, 2)))


def test_score_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        ScoreMatrix(values=np.array([[np.nan, 0.0]]), resolved_bandwidth=1.0, ridge_eta=0.1)
