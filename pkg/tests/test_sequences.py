import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accucurve import (AccumulationCurve, DataFormatError, DiscoverySequence,
                       curve_from_indicators, indicators_from_curve,
                       indicators_from_tags, split)
from accucurve.sequences import (Site, SiteDataset, read_indicators,
                                 read_site_dataset, read_tags, write_indicators,
                                 write_site_dataset, write_tags)


class TestIndicatorsFromTags:
    def test_basic(self):
        assert indicators_from_tags(["a", "b", "a"]).indicators.tolist() == [1, 1, 0]

    def test_single(self):
        assert indicators_from_tags(["a"]).indicators.tolist() == [1]

    def test_repeats_then_new(self):
        assert indicators_from_tags(["x", "x", "x", "y"]).indicators.tolist() == [1, 0, 0, 1]

    def test_empty_rejected(self):
        with pytest.raises(DataFormatError, match="empty"):
            indicators_from_tags([])

    def test_whitespace_trimmed_case_kept(self):
        d = indicators_from_tags([" a", "a ", "A"])
        assert d.indicators.tolist() == [1, 0, 1]

    @given(st.lists(st.sampled_from("abcde"), min_size=1, max_size=60))
    def test_sum_equals_distinct_count(self, tags):
        assert indicators_from_tags(tags).k == len(set(tags))


class TestCurveConversions:
    def test_examples(self):
        assert curve_from_indicators(DiscoverySequence([1, 1, 0])).counts.tolist() == [1, 2, 2]
        assert curve_from_indicators(DiscoverySequence([1])).counts.tolist() == [1]
        assert curve_from_indicators(DiscoverySequence([1, 0, 0, 1])).counts.tolist() == [1, 1, 1, 2]

    @given(st.lists(st.sampled_from([0, 1]), min_size=0, max_size=80))
    @settings(max_examples=60)
    def test_round_trip(self, tail):
        d = DiscoverySequence([1] + tail)
        assert np.array_equal(indicators_from_curve(curve_from_indicators(d)).indicators,
                              d.indicators)

    def test_curve_validation(self):
        with pytest.raises(DataFormatError):
            AccumulationCurve([2, 3])
        with pytest.raises(DataFormatError):
            AccumulationCurve([1, 3])
        with pytest.raises(DataFormatError):
            AccumulationCurve([1, 1, 0])


class TestDiscoverySequence:
    def test_first_must_be_discovery(self):
        with pytest.raises(DataFormatError):
            DiscoverySequence([0, 1])

    def test_values_binary(self):
        with pytest.raises(DataFormatError):
            DiscoverySequence([1, 2])

    def test_immutable(self):
        d = DiscoverySequence([1, 0])
        with pytest.raises(ValueError):
            d.indicators[0] = 0


class TestSplit:
    def test_prefix(self):
        train, test = split(DiscoverySequence([1, 1, 0, 1, 0, 0]), 1 / 3)
        assert train.indicators.tolist() == [1, 1]
        assert test.tolist() == [0, 1, 0, 0]

    def test_concat_identity(self):
        d = DiscoverySequence([1, 0, 1, 1, 0, 0, 1, 0])
        for fraction in (0.2, 0.5, 0.9):
            train, test = split(d, fraction)
            joined = np.concatenate([train.indicators, test])
            assert np.array_equal(joined, d.indicators)

    def test_third_of_90000_is_30000(self):
        d = DiscoverySequence(np.r_[1, np.zeros(89999, dtype=int)])
        train, _ = split(d, 1 / 3)
        assert train.n == 30000

    def test_empty_train_rejected(self):
        with pytest.raises(DataFormatError):
            split(DiscoverySequence([1, 0]), 0.4)

    def test_empty_test_rejected(self):
        # fraction so close to 1 that the cut lands past the last element
        with pytest.raises(DataFormatError):
            split(DiscoverySequence([1] + [0] * 99), 1 - 1e-16)


class TestFileFormats:
    def test_tags_round_trip(self, tmp_path):
        path = tmp_path / "tags.txt"
        write_tags(path, ["a", "b", "a"])
        assert read_tags(path) == ["a", "b", "a"]

    def test_tag_comments_ignored(self, tmp_path):
        path = tmp_path / "tags.txt"
        path.write_text("# header\na\n\nb\n# note\na\n", encoding="utf-8")
        assert read_tags(path) == ["a", "b", "a"]

    def test_indicator_round_trip(self, tmp_path):
        path = tmp_path / "ind.csv"
        d = DiscoverySequence([1, 0, 1, 1])
        write_indicators(path, d)
        assert np.array_equal(read_indicators(path).indicators, d.indicators)

    def test_min_length_guard(self, tmp_path):
        path = tmp_path / "ind.csv"
        write_indicators(path, DiscoverySequence([1]))
        with pytest.raises(DataFormatError):
            read_indicators(path, min_length=2)
        assert read_indicators(path, min_length=1).n == 1

    def test_bad_header(self, tmp_path):
        path = tmp_path / "ind.csv"
        path.write_text("a,b\n1,1\n", encoding="utf-8")
        with pytest.raises(DataFormatError):
            read_indicators(path)

    def test_site_dataset_round_trip(self, tmp_path):
        data = SiteDataset((
            Site("s1", DiscoverySequence([1, 0, 1]), np.array([1.0, 0.5])),
            Site("s2", DiscoverySequence([1, 1]), np.array([1.0, -0.3])),
        ))
        ind, cov = tmp_path / "ms.csv", tmp_path / "cv.csv"
        write_site_dataset(ind, cov, data)
        loaded = read_site_dataset(ind, cov)
        assert [s.site_id for s in loaded] == ["s1", "s2"]
        assert np.array_equal(loaded.sites[0].sequence.indicators, [1, 0, 1])
        assert np.allclose(loaded.sites[1].covariates, [1.0, -0.3])

    def test_min_sequences_filter(self, tmp_path):
        data = SiteDataset((
            Site("short", DiscoverySequence([1, 0]), np.array([1.0])),
            Site("long", DiscoverySequence([1, 0, 1, 0, 1]), np.array([1.0])),
        ))
        ind, cov = tmp_path / "ms.csv", tmp_path / "cv.csv"
        write_site_dataset(ind, cov, data)
        kept = read_site_dataset(ind, cov, min_sequences=4)
        assert [s.site_id for s in kept] == ["long"]

    def test_covariate_dimension_mismatch(self, tmp_path):
        ind, cov = tmp_path / "ms.csv", tmp_path / "cv.csv"
        ind.write_text("site_id,index,discovery\na,1,1\na,2,0\n", encoding="utf-8")
        cov.write_text("site_id,z1\nb,1.0\n", encoding="utf-8")
        with pytest.raises(DataFormatError, match="missing covariates"):
            read_site_dataset(ind, cov)
