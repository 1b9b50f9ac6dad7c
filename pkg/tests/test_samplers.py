import math

import numpy as np
import pytest
from scipy.stats import norm

from accucurve import ParameterError, SignConstraints, sample_polya_gamma, sample_truncated_mvn
from accucurve.samplers import (_pg_vector, _tmvn_from_precision, _trunc_norm_1d,
                                feasible_point)


def pg_mean(z):
    return 0.25 if z == 0 else math.tanh(z / 2.0) / (2.0 * z)


def pg_variance(z, terms=200_000):
    """Series oracle: PG(1,z) is a weighted sum of independent Exp(1) terms."""
    k = np.arange(1, terms + 1)
    d = (k - 0.5) ** 2 + z ** 2 / (4.0 * math.pi ** 2)
    return float((1.0 / (2.0 * math.pi ** 2)) ** 2 * (1.0 / d ** 2).sum())


class TestPolyaGamma:
    @pytest.mark.parametrize("z", [0.0, 0.5, 2.0, 10.0])
    def test_mean_identity(self, z):
        rng = np.random.default_rng(101)
        draws = sample_polya_gamma(z, rng, size=200_000)
        se = draws.std() / math.sqrt(draws.size)
        assert abs(draws.mean() - pg_mean(z)) < 3.5 * se

    def test_variance_oracle(self):
        rng = np.random.default_rng(7)
        z = 1.0
        draws = sample_polya_gamma(z, rng, size=300_000)
        target = pg_variance(z)
        # sampling error of a variance estimate: sd ~ var * sqrt(2/n) for
        # near-Gaussian summaries; use a generous multiple
        assert abs(draws.var() - target) < 8 * target * math.sqrt(2.0 / draws.size)

    def test_sign_symmetry_exact(self):
        # the tilt enters through |z| only, so mirrored seeds give identical streams
        a = sample_polya_gamma(3.0, np.random.default_rng(5), size=1000)
        b = sample_polya_gamma(-3.0, np.random.default_rng(5), size=1000)
        np.testing.assert_array_equal(a, b)

    def test_positive(self):
        draws = sample_polya_gamma(4.0, np.random.default_rng(2), size=5000)
        assert (draws > 0).all()

    def test_scalar_api(self):
        value = sample_polya_gamma(1.0, np.random.default_rng(0))
        assert isinstance(value, float) and value > 0

    def test_vector_of_mixed_tilts(self):
        rng = np.random.default_rng(13)
        z = np.array([0.0, 0.1, -4.0, 25.0, 0.7])
        big = np.vstack([_pg_vector(z, rng) for _ in range(30_000)])
        for j, zj in enumerate(z):
            se = big[:, j].std() / math.sqrt(big.shape[0])
            assert abs(big[:, j].mean() - pg_mean(zj)) < 4 * se

    def test_reproducible(self):
        a = sample_polya_gamma(1.5, np.random.default_rng(42), size=500)
        b = sample_polya_gamma(1.5, np.random.default_rng(42), size=500)
        np.testing.assert_array_equal(a, b)

    def test_non_finite_rejected(self):
        with pytest.raises(ParameterError):
            sample_polya_gamma(math.inf, np.random.default_rng(0))


class TestSignConstraints:
    def test_satisfied(self):
        cons = SignConstraints(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
                               np.array([True, False]))
        assert cons.satisfied(np.array([5.0, -0.1, 0.0]))
        assert not cons.satisfied(np.array([5.0, 0.0, 0.0]))  # strict row at zero
        assert not cons.satisfied(np.array([5.0, -0.1, 0.2]))

    def test_rows_mask(self):
        cons = SignConstraints(np.array([[1.0, 0.0]]), np.array([True]))
        xs = np.array([[-1.0, 9.9], [0.5, 0.0]])
        np.testing.assert_array_equal(cons.satisfied_rows(xs), [True, False])

    def test_feasible_point_projection(self):
        cons = SignConstraints(np.array([[0.0, 1.0], [1.0, 1.0]]),
                               np.array([True, True]))
        x = feasible_point(np.array([2.0, 3.0]), cons)
        assert cons.satisfied(x)

    def test_coordinate_bounds(self):
        cons = SignConstraints(np.array([[0.0, 1.0, 0.0]]), np.array([True]))
        lo, hi = cons.coordinate_bounds(1, np.array([0.0, -1.0, 0.0]))
        assert lo == -np.inf and hi == pytest.approx(0.0)


class TestTruncatedNormal1D:
    def test_half_normal_mean(self):
        rng = np.random.default_rng(3)
        draws = np.array([_trunc_norm_1d(0.0, 1.0, -np.inf, 0.0, rng)
                          for _ in range(20_000)])
        se = draws.std() / math.sqrt(draws.size)
        assert abs(draws.mean() - (-math.sqrt(2 / math.pi))) < 4 * se

    def test_far_tail(self):
        rng = np.random.default_rng(4)
        draws = np.array([_trunc_norm_1d(0.0, 1.0, 9.0, np.inf, rng)
                          for _ in range(5_000)])
        assert (draws >= 9.0).all()
        # E[X | X > a] = phi(a) / Phi(-a)
        expected = norm.pdf(9.0) / norm.sf(9.0)
        assert draws.mean() == pytest.approx(expected, rel=0.01)

    def test_mirror_far_tail(self):
        rng = np.random.default_rng(8)
        draws = np.array([_trunc_norm_1d(0.0, 1.0, -np.inf, -9.0, rng)
                          for _ in range(5_000)])
        assert (draws <= -9.0).all()


class TestTruncatedMVN:
    def test_half_normal_mean(self):
        rng = np.random.default_rng(21)
        cons = SignConstraints(np.array([[1.0]]), np.array([True]))
        draws = np.array([sample_truncated_mvn([0.0], [[1.0]], cons, rng)[0]
                          for _ in range(20_000)])
        se = draws.std() / math.sqrt(draws.size)
        assert abs(draws.mean() - (-math.sqrt(2 / math.pi))) < 4 * se

    def test_inactive_constraints_accept_quickly(self):
        rng = np.random.default_rng(2)
        cons = SignConstraints(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
                               np.array([True, False]))
        mean = np.array([0.0, -30.0, -30.0])
        precision = np.eye(3)
        chol = np.linalg.cholesky(precision)
        total_rejected = 0
        for _ in range(200):
            draw, rejected, fallback = _tmvn_from_precision(
                mean, precision, chol, cons, rng)
            assert cons.satisfied(draw)
            assert not fallback
            total_rejected += rejected
        assert total_rejected == 0

    def test_every_draw_satisfies_constraints(self):
        rng = np.random.default_rng(17)
        cons = SignConstraints(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
                               np.array([True, False]))
        cov = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 0.5]])
        for _ in range(500):
            draw = sample_truncated_mvn([0.5, -0.5, -0.1], cov, cons, rng)
            assert cons.satisfied(draw)

    def test_gibbs_fallback_against_oracle(self):
        # mean +3, constraint x < 0: rejection would need ~740 proposals per
        # draw, so the Gibbs fallback carries the load; oracle mean is
        # 3 - phi(3)/Phi(-3) for the lower-tail truncated normal
        rng = np.random.default_rng(33)
        cons = SignConstraints(np.array([[1.0]]), np.array([True]))
        precision = np.array([[1.0]])
        chol = np.linalg.cholesky(precision)
        draws, fallbacks = [], 0
        for _ in range(4_000):
            draw, _, used_fallback = _tmvn_from_precision(
                np.array([3.0]), precision, chol, cons, rng, max_rejections=50)
            fallbacks += int(used_fallback)
            draws.append(draw[0])
        draws = np.array(draws)
        assert (draws < 0).all()
        assert fallbacks > 0
        expected = 3.0 - norm.pdf(3.0) / norm.cdf(-3.0)
        assert draws.mean() == pytest.approx(expected, abs=0.02)

    def test_degenerate_covariance_rejected(self):
        rng = np.random.default_rng(0)
        cons = SignConstraints.none(2)
        with pytest.raises(ParameterError):
            sample_truncated_mvn([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]], cons, rng)
