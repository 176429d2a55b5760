"""Outer-product matrix and the fixed polynomial feature maps."""

import numpy as np
import pytest

from pvreg import features
from pvreg.features import ALL_KINDS, FeatureError, FeatureMapKind


def pair_count_oracle(nf):
    """Brute-force enumeration of unordered index pairs i < j."""
    count = 0
    for i in range(nf):
        for j in range(nf):
            if i < j:
                count += 1
    return count


class TestOuterProduct:
    def test_zero_vector(self):
        np.testing.assert_array_equal(features.outer_product([0, 0, 0, 0]), np.zeros((4, 4)))

    def test_ones_vector(self):
        np.testing.assert_array_equal(features.outer_product([1, 1, 1, 1]), np.ones((4, 4)))

    def test_diagonal_is_squares(self):
        m = features.outer_product([0.5, 0.2, 0.1, 0.4])
        np.testing.assert_allclose(np.diag(m), [0.25, 0.04, 0.01, 0.16])

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.uniform(-2, 2, size=rng.integers(1, 9))
            m = features.outer_product(x)
            np.testing.assert_array_equal(m, m.T)

    def test_empty_vector(self):
        with pytest.raises(FeatureError):
            features.outer_product([])

    def test_non_finite(self):
        with pytest.raises(FeatureError):
            features.outer_product([1.0, np.nan])


class TestFeaturize:
    def test_nl1_pair_values_and_order(self):
        fv = features.featurize([0.5, 0.2, 0.1, 0.4], FeatureMapKind.NL1)
        np.testing.assert_allclose(fv.values, [0.10, 0.05, 0.20, 0.02, 0.08, 0.04])

    def test_nl6_of_ones_is_fourteen_ones(self):
        fv = features.featurize([1, 1, 1, 1], FeatureMapKind.NL6)
        assert len(fv) == 14
        np.testing.assert_array_equal(fv.values, np.ones(14))

    def test_nl5_layout(self):
        x = np.array([0.3, 0.6, 0.1, 0.9])
        fv = features.featurize(x, FeatureMapKind.NL5)
        assert len(fv) == 8
        np.testing.assert_allclose(fv.values, np.concatenate([x, x * x]))

    def test_single_feature_square(self):
        fv = features.featurize([0.3], FeatureMapKind.NL2)
        np.testing.assert_allclose(fv.values, [0.09])

    @pytest.mark.parametrize("kind", ["nl1", "nl3", "nl4", "nl6"])
    def test_cross_product_maps_reject_single_feature(self, kind):
        with pytest.raises(FeatureError, match="single-feature"):
            features.featurize([0.5], kind)

    def test_linear_passthrough(self):
        x = [0.2, 0.7, 0.4]
        np.testing.assert_array_equal(features.featurize(x, "linear").values, x)

    def test_nl3_is_nl1_then_nl2(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0, 1, size=5)
        nl3 = features.featurize(x, "nl3").values
        nl1 = features.featurize(x, "nl1").values
        nl2 = features.featurize(x, "nl2").values
        np.testing.assert_array_equal(nl3, np.concatenate([nl1, nl2]))

    def test_nl6_is_linear_then_nl3(self):
        rng = np.random.default_rng(12)
        x = rng.uniform(0, 1, size=6)
        nl6 = features.featurize(x, "nl6").values
        nl3 = features.featurize(x, "nl3").values
        np.testing.assert_array_equal(nl6, np.concatenate([x, nl3]))

    def test_nl4_is_linear_then_pairs(self):
        rng = np.random.default_rng(13)
        x = rng.uniform(0, 1, size=4)
        nl4 = features.featurize(x, "nl4").values
        nl1 = features.featurize(x, "nl1").values
        np.testing.assert_array_equal(nl4, np.concatenate([x, nl1]))

    @pytest.mark.parametrize("kind", ["nl1", "nl2"])
    def test_quadratic_scaling(self, kind):
        rng = np.random.default_rng(21)
        for _ in range(10):
            x = rng.uniform(-1, 1, size=4)
            c = rng.uniform(0.1, 3.0)
            base = features.featurize(x, kind).values
            scaled = features.featurize(c * x, kind).values
            np.testing.assert_allclose(scaled, c * c * base, rtol=1e-12)

    def test_zero_input(self):
        zero = np.zeros(4)
        for kind in ("nl1", "nl2", "nl3"):
            assert not features.featurize(zero, kind).values.any()
        for kind in ("nl4", "nl5", "nl6"):
            np.testing.assert_array_equal(features.featurize(zero, kind).values,
                                          np.zeros(features.dimensionality(kind, 4)))


class TestDimensionality:
    def test_stated_sizes_at_four_features(self):
        expected = {"linear": 4, "nl1": 6, "nl2": 4, "nl3": 10, "nl4": 10, "nl5": 8, "nl6": 14}
        for kind, size in expected.items():
            assert features.dimensionality(kind, 4) == size

    def test_single_feature_square_size(self):
        assert features.dimensionality("nl2", 1) == 1

    @pytest.mark.parametrize("nf", range(2, 9))
    def test_formulas_against_pair_enumeration(self, nf):
        pairs = pair_count_oracle(nf)
        assert features.dimensionality("nl1", nf) == pairs
        assert features.dimensionality("nl3", nf) == pairs + nf
        assert features.dimensionality("nl4", nf) == nf + pairs
        assert features.dimensionality("nl5", nf) == 2 * nf
        assert features.dimensionality("nl6", nf) == nf + pairs + nf

    @pytest.mark.parametrize("nf", range(2, 9))
    def test_featurized_length_matches_formula(self, nf):
        rng = np.random.default_rng(nf)
        x = rng.uniform(0, 1, size=nf)
        for kind in ALL_KINDS:
            assert len(features.featurize(x, kind)) == features.dimensionality(kind, nf)

    def test_invalid_nf(self):
        with pytest.raises(FeatureError):
            features.dimensionality("nl1", 0)


def test_featurize_matrix_rows():
    rng = np.random.default_rng(5)
    rows = rng.uniform(0, 1, size=(7, 4))
    out = features.featurize_matrix(rows, "nl6")
    assert out.shape == (7, 14)
    np.testing.assert_array_equal(out[2], features.featurize(rows[2], "nl6").values)
