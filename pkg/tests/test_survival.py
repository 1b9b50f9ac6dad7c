import math

import numpy as np
import pytest
from scipy.integrate import quad

from accucurve import ParameterError, RegimeError, SurvivalParams

# a spread of valid parameter sets across the three families
GRID = [
    SurvivalParams.ll1(0.5),
    SurvivalParams.ll1(30.0),
    SurvivalParams.ll2(1.0, -1.0),
    SurvivalParams.ll2(2.0, 0.5),
    SurvivalParams.ll2(10.0, -0.25),
    SurvivalParams.ll3(2.0, 0.0, 0.5),
    SurvivalParams.ll3(30.0, 0.25, 0.99),
    SurvivalParams.ll3(1512.8, -0.07, 0.99),
]


class TestSurvivalFunction:
    def test_ll1_half(self):
        assert SurvivalParams.ll1(1.0).survival(1.0) == pytest.approx(0.5)

    def test_boundary_is_one(self):
        for params in GRID:
            assert params.survival(0.0) == 1.0

    def test_ll3_closed_form(self):
        # alpha 2, sigma 0, phi 0.5 at t = 2: (2 * 0.25) / (2 * 0.25 + 2)
        assert SurvivalParams.ll3(2.0, 0.0, 0.5).survival(2.0) == pytest.approx(0.2)

    def test_strictly_decreasing(self):
        t = np.linspace(0.0, 50.0, 400)
        for params in GRID:
            values = params.survival(t)
            assert np.all(np.diff(values) < 0)

    def test_negative_t_rejected(self):
        with pytest.raises(ParameterError):
            SurvivalParams.ll1(1.0).survival(-0.5)

    def test_nesting(self):
        t = np.linspace(0.0, 90.0, 301)
        ll3 = SurvivalParams.ll3(3.0, 0.2, 1.0)
        ll2 = SurvivalParams.ll2(3.0, 0.2)
        np.testing.assert_array_equal(ll3.survival(t), ll2.survival(t))
        ll2_dir = SurvivalParams.ll2(3.0, 0.0)
        ll1 = SurvivalParams.ll1(3.0)
        np.testing.assert_allclose(ll2_dir.survival(t), ll1.survival(t), rtol=1e-15)


class TestDiscoveryProbs:
    def test_dirichlet_sequence(self):
        np.testing.assert_allclose(SurvivalParams.ll1(1.0).discovery_probs(3),
                                   [1.0, 0.5, 1.0 / 3.0])

    def test_two_obs(self):
        np.testing.assert_allclose(SurvivalParams.ll1(30.0).discovery_probs(2),
                                   [1.0, 30.0 / 31.0])

    def test_phi_one_matches_ll2(self):
        a = SurvivalParams.ll3(4.0, 0.3, 1.0).discovery_probs(10)
        b = SurvivalParams.ll2(4.0, 0.3).discovery_probs(10)
        np.testing.assert_array_equal(a, b)

    def test_first_is_one_and_decreasing(self):
        for params in GRID:
            probs = params.discovery_probs(40)
            assert probs[0] == 1.0
            assert np.all(np.diff(probs) < 0)

    def test_zero_rejected(self):
        with pytest.raises(ParameterError):
            SurvivalParams.ll1(1.0).discovery_probs(0)


class TestBetaMap:
    def test_round_trip(self):
        for params in GRID:
            back = SurvivalParams.from_beta(params.family, params.beta)
            assert back.alpha == pytest.approx(params.alpha, rel=1e-14)
            assert back.sigma == pytest.approx(params.sigma, abs=1e-14)
            assert back.phi == pytest.approx(params.phi, rel=1e-14)

    def test_values(self):
        params = SurvivalParams.ll3(2.0, -0.5, 0.9)
        b = params.beta
        assert b[0] == pytest.approx(math.log(2.0))
        assert b[1] == pytest.approx(-1.5)
        assert b[2] == pytest.approx(math.log(0.9))

    def test_guard_rails(self):
        clamped = SurvivalParams.from_beta("ll3", [0.0, 0.5, 1.0])
        assert clamped.sigma < 1.0
        assert clamped.phi == 1.0

    def test_json_round_trip(self):
        params = SurvivalParams.ll3(7.0, 0.1, 0.95)
        payload = params.to_dict()
        assert payload["beta"] == [pytest.approx(v) for v in params.beta]
        assert SurvivalParams.from_dict(payload) == params


class TestParameterValidation:
    @pytest.mark.parametrize("bad", [
        dict(family="ll1", alpha=-1.0),
        dict(family="ll1", alpha=0.0),
        dict(family="ll2", alpha=1.0, sigma=1.0),
        dict(family="ll3", alpha=1.0, sigma=0.0, phi=0.0),
        dict(family="ll3", alpha=1.0, sigma=0.0, phi=1.5),
        dict(family="llx", alpha=1.0),
    ])
    def test_rejected(self, bad):
        with pytest.raises(ParameterError):
            SurvivalParams(**bad)

    def test_family_pins(self):
        with pytest.raises(ParameterError):
            SurvivalParams("ll1", 1.0, sigma=0.5)
        with pytest.raises(ParameterError):
            SurvivalParams("ll2", 1.0, sigma=0.5, phi=0.9)


class TestExpectedLifetime:
    def test_ll2_sigma_minus_one(self):
        # integral of 1/(1 + t^2) over [0, inf) = pi/2, independently by quadrature
        oracle, _ = quad(lambda t: 1.0 / (1.0 + t * t), 0, np.inf)
        value = SurvivalParams.ll2(1.0, -1.0).expected_lifetime()
        assert value == pytest.approx(math.pi / 2, rel=1e-12)
        assert value == pytest.approx(oracle, rel=1e-10)

    def test_ll2_closed_form_vs_quadrature(self):
        params = SurvivalParams.ll2(2.0, -0.5)
        oracle, _ = quad(lambda t: 2.0 / (2.0 + t ** 1.5), 0, np.inf)
        assert params.expected_lifetime() == pytest.approx(oracle, rel=1e-9)

    def test_ll1_infinite(self):
        assert SurvivalParams.ll1(5.0).expected_lifetime() == math.inf
        assert SurvivalParams.ll2(3.0, 0.4).expected_lifetime() == math.inf

    def test_ll3_vs_quadrature_oracle(self):
        params = SurvivalParams.ll3(1.0, 0.0, 0.5)
        oracle, _ = quad(lambda t: 0.5 ** t / (0.5 ** t + t), 0, 200, limit=300)
        assert params.expected_lifetime() == pytest.approx(oracle, rel=1e-8)


class TestRegime:
    def test_ll1_infinite(self):
        report = SurvivalParams.ll1(30.0).classify_regime()
        assert report.regime == "infinite"
        assert report.growth_exponent is None

    def test_table_style_ll3_finite(self):
        report = SurvivalParams.ll3(1512.8, -0.07, 0.99).classify_regime()
        assert report.regime == "finite"
        assert math.isfinite(report.expected_lifetime)

    def test_ll2_polynomial_growth(self):
        report = SurvivalParams.ll2(1.0, 0.25).classify_regime()
        assert report.regime == "infinite"
        assert report.growth_exponent == pytest.approx(0.25)

    def test_finite_iff_lifetime_finite(self):
        for params in GRID:
            report = params.classify_regime()
            assert report.finite == math.isfinite(report.expected_lifetime)


class TestGrowthRate:
    def test_ll1_log2(self):
        assert SurvivalParams.ll1(1.0).growth_rate(2) == pytest.approx(math.log(2.0))

    def test_ll1_closed_form_vs_quadrature(self):
        params = SurvivalParams.ll1(30.0)
        closed = params.growth_rate(1000)
        oracle, _ = quad(lambda t: 30.0 / (30.0 + t), 0, 999)
        assert closed == pytest.approx(30.0 * (math.log(1029.0) - math.log(30.0)), rel=1e-12)
        assert closed == pytest.approx(oracle, rel=1e-10)

    def test_polynomial_doubling_ratio(self):
        # b_{2n} / b_n -> 2^sigma; the correction decays like log(n)/n^(1-sigma)
        params = SurvivalParams.ll2(1.0, 0.5)
        n = 10_000_000
        ratio = params.growth_rate(2 * n) / params.growth_rate(n)
        assert ratio == pytest.approx(2 ** 0.5, rel=2e-3)

    def test_finite_regime_rejected(self):
        with pytest.raises(RegimeError):
            SurvivalParams.ll3(1.0, 0.0, 0.9).growth_rate(100)


class TestRichnessBounds:
    @staticmethod
    def _series_estimate(params, tol=1e-12):
        """Chunked sum of S(0) + S(1) + ... plus an analytic remainder bound."""
        total = 0.0
        t0 = 0
        term = 1.0
        while term >= tol:
            ts = np.arange(t0, t0 + 50_000, dtype=float)
            vals = params.survival(ts)
            total += float(vals.sum())
            term = float(vals[-1])
            t0 += 50_000
        if params.phi < 1.0:
            remainder = term / (1.0 - params.phi)
        else:
            remainder = params.alpha * t0 ** params.sigma / abs(params.sigma)
        return total, remainder

    def test_series_between_lifetime_and_lifetime_plus_one(self):
        fast_decay = [
            SurvivalParams.ll2(1.0, -1.0),
            SurvivalParams.ll2(10.0, -1.5),
            SurvivalParams.ll3(2.0, 0.0, 0.5),
            SurvivalParams.ll3(1512.8, -0.07, 0.99),
        ]
        for params in fast_decay:
            lifetime = params.expected_lifetime()
            total, remainder = self._series_estimate(params)
            assert lifetime <= total + remainder + 1e-9
            assert total <= lifetime + 1.0
