import numpy as np
import pytest

from accucurve import (GeneratorSpec, ParameterError, SurvivalParams, generate,
                       indicators_from_tags, simulate_dirichlet,
                       simulate_dirichlet_multinomial, simulate_from_model,
                       simulate_pitman_yor, simulate_zipf)


def mean_k(sampler, reps):
    ks = [indicators_from_tags(sampler(seed)).k for seed in range(reps)]
    return float(np.mean(ks)), float(np.std(ks, ddof=1) / np.sqrt(reps))


class TestDirichlet:
    def test_first_observation_new(self):
        tags = simulate_dirichlet(3.0, 1, seed=0)
        assert indicators_from_tags(tags).k == 1

    def test_large_alpha_all_distinct(self):
        tags = simulate_dirichlet(1e9, 100, seed=1)
        assert indicators_from_tags(tags).k == 100

    def test_mean_matches_formula(self):
        alpha, n = 5.0, 400
        expected = sum(alpha / (alpha + i - 1) for i in range(1, n + 1))
        mean, se = mean_k(lambda s: simulate_dirichlet(alpha, n, s), 300)
        assert abs(mean - expected) < 3.5 * se

    def test_deterministic(self):
        assert simulate_dirichlet(4.0, 200, 9) == simulate_dirichlet(4.0, 200, 9)

    def test_validation(self):
        with pytest.raises(ParameterError):
            simulate_dirichlet(-1.0, 10, 0)
        with pytest.raises(ParameterError):
            simulate_dirichlet(1.0, 0, 0)


class TestPitmanYor:
    def test_sigma_zero_matches_dirichlet_mean(self):
        alpha, n, reps = 3.0, 300, 300
        expected = sum(alpha / (alpha + i - 1) for i in range(1, n + 1))
        mean, se = mean_k(lambda s: simulate_pitman_yor(alpha, 0.0, n, s), reps)
        assert abs(mean - expected) < 3.5 * se

    def test_frozen_regression(self):
        # deterministic fixture: mean distinct count over seeds 0..399
        ks = [indicators_from_tags(simulate_pitman_yor(2.0, 0.3, 200, s)).k
              for s in range(400)]
        assert np.mean(ks) == pytest.approx(21.49, abs=1e-9)

    def test_step_mass_decomposition(self):
        # at each step: new mass (alpha + k sigma), distinct-pick mass
        # k (1 - sigma) and repeat-pick mass (#repeats) add to alpha + i - 1
        alpha, sigma = 2.0, 0.4
        tags = simulate_pitman_yor(alpha, sigma, 1000, seed=3)
        seen = set()
        repeats = 0
        for i, tag in enumerate(tags, start=1):
            k = len(seen)
            total = (alpha + k * sigma) + k * (1 - sigma) + repeats
            assert total == pytest.approx(alpha + i - 1)
            if tag in seen:
                repeats += 1
            else:
                seen.add(tag)

    def test_validation(self):
        with pytest.raises(ParameterError):
            simulate_pitman_yor(1.0, 1.0, 10, 0)
        with pytest.raises(ParameterError):
            simulate_pitman_yor(-0.5, 0.3, 10, 0)


class TestDirichletMultinomial:
    def test_support_bound(self):
        tags = simulate_dirichlet_multinomial(-0.25, 40, 4000, seed=2)
        assert indicators_from_tags(tags).k <= 40

    def test_single_species(self):
        tags = simulate_dirichlet_multinomial(-0.5, 1, 50, seed=0)
        assert set(tags) == {"1"}

    def test_frozen_regression(self):
        ks = [indicators_from_tags(simulate_dirichlet_multinomial(-0.25, 50, 400, s)).k
              for s in range(400)]
        assert np.mean(ks) == pytest.approx(29.3825, abs=1e-9)

    def test_saturation_reaches_support(self):
        # a long run should eventually observe every species
        tags = simulate_dirichlet_multinomial(-0.9, 12, 3000, seed=5)
        assert indicators_from_tags(tags).k == 12

    def test_validation(self):
        with pytest.raises(ParameterError):
            simulate_dirichlet_multinomial(0.1, 10, 10, 0)
        with pytest.raises(ParameterError):
            simulate_dirichlet_multinomial(-0.5, 0, 10, 0)


class TestZipf:
    def test_single_species_constant(self):
        assert set(simulate_zipf(1, 0.3, 30, 0)) == {"1"}

    def test_support_bound(self):
        tags = simulate_zipf(25, 0.3, 2000, seed=1)
        assert indicators_from_tags(tags).k <= 25

    def test_frequency_ratio_law_of_large_numbers(self):
        tags = simulate_zipf(50, 0.3, 1_000_000, seed=7)
        counts = {}
        for tag in tags:
            counts[tag] = counts.get(tag, 0) + 1
        ratio = counts["1"] / counts["2"]
        assert ratio == pytest.approx(2.0 ** 0.3, rel=0.02)

    def test_frozen_regression(self):
        ks = [indicators_from_tags(simulate_zipf(100, 0.3, 500, s)).k
              for s in range(400)]
        assert np.mean(ks) == pytest.approx(98.7425, abs=1e-9)


class TestModelSimulator:
    def test_first_indicator_always_one(self):
        for seed in range(5):
            d = simulate_from_model(SurvivalParams.ll3(3.0, 0.2, 0.95), 50, seed)
            assert d.indicators[0] == 1

    def test_mean_of_k2(self):
        means = [simulate_from_model(SurvivalParams.ll1(1.0), 2, s).k
                 for s in range(4000)]
        assert np.mean(means) == pytest.approx(1.5, abs=0.03)

    def test_plateau_and_moment_match(self):
        params = SurvivalParams.ll3(20.0, 0.0, 0.9)
        expected = params.discovery_probs(500).sum()
        ks = [simulate_from_model(params, 500, s).k for s in range(300)]
        se = np.std(ks, ddof=1) / np.sqrt(len(ks))
        assert abs(np.mean(ks) - expected) < 3.5 * se


class TestGeneratorSpec:
    def test_dispatch_and_determinism(self):
        spec = GeneratorSpec(kind="dirichlet", n=100, seed=5, alpha=3.0)
        tags_a, seq_a = generate(spec)
        tags_b, seq_b = generate(spec)
        assert tags_a == tags_b
        assert np.array_equal(seq_a.indicators, seq_b.indicators)

    def test_model_kind_has_no_tags(self):
        spec = GeneratorSpec(kind="model", n=20, seed=0,
                             params=SurvivalParams.ll1(2.0))
        tags, seq = generate(spec)
        assert tags is None
        assert seq.n == 20

    def test_missing_parameter_rejected(self):
        with pytest.raises(ParameterError):
            GeneratorSpec(kind="dirichlet", n=10, seed=0)
        with pytest.raises(ParameterError):
            GeneratorSpec(kind="zipf", n=10, seed=0, H=5)

    def test_to_dict(self):
        spec = GeneratorSpec(kind="zipf", n=10, seed=3, H=5, shape=0.3)
        payload = spec.to_dict()
        assert payload == {"kind": "zipf", "n": 10, "seed": 3, "H": 5, "shape": 0.3}
