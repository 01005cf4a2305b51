import math
from fractions import Fraction

import pytest
from hypothesis import given

import oracles
from lecam import (
    ExperimentParams,
    RatioClass,
    SupportCapError,
    ValidationError,
    count_vector_matrix,
    count_vector_size,
    enumerate_support,
    in_truncated_set,
    point_in_support,
    support_cap,
    support_matrix,
    support_size,
    validate_params,
    weight_ratio,
)
from lecam.lattice import SUPPORT_CAP_ENV
from strategies import experiment_params


class TestValidateParams:
    def test_integer_counts(self):
        params = validate_params(10, 5, [5, 5])
        assert params == ExperimentParams(10, 5, (5, 5))
        assert params.dim == 1
        assert params.weights == (0.5, 0.5)
        assert params.weight_fractions == (Fraction(1, 2), Fraction(1, 2))

    def test_fraction_weights(self):
        params = validate_params(12, 4, [Fraction(1, 3)] * 3)
        assert params.counts == (4, 4, 4)

    def test_count_sum_mismatch(self):
        with pytest.raises(ValidationError, match="expected 1"):
            validate_params(10, 5, [5, 6])

    def test_rejects_float_weights(self):
        with pytest.raises(ValidationError):
            validate_params(10, 5, [0.5, 0.5])

    def test_rejects_bool(self):
        with pytest.raises(ValidationError):
            validate_params(10, 5, [True, 9])

    def test_rejects_nonintegral_scaling(self):
        with pytest.raises(ValidationError):
            validate_params(10, 5, [Fraction(1, 3), Fraction(2, 3)])

    def test_rejects_zero_count(self):
        with pytest.raises(ValidationError):
            validate_params(10, 5, [0, 10])

    @pytest.mark.parametrize("population,draws", [(0, 0), (10, 0), (10, 11), (-5, 2)])
    def test_rejects_bad_sizes(self, population, draws):
        with pytest.raises(ValidationError):
            validate_params(population, draws, [5, 5])

    def test_needs_two_categories(self):
        with pytest.raises(ValidationError):
            validate_params(10, 5, [10])


class TestSupport:
    def test_one_dim_support(self):
        params = validate_params(10, 5, (5, 5))
        assert enumerate_support(params) == [(k,) for k in range(6)]
        assert support_size(params) == 6

    def test_two_dim_support_matches_oracle(self):
        params = validate_params(12, 4, (4, 4, 4))
        expected = sorted(oracles.support_points((4, 4, 4), 4))
        assert enumerate_support(params) == expected
        assert support_size(params) == len(expected)

    def test_clipped_support(self):
        # draws exceed one category, so that coordinate saturates early
        params = validate_params(6, 5, (2, 4))
        points = enumerate_support(params)
        assert points == [(1,), (2,)]

    def test_small_symmetric_support(self):
        params = validate_params(4, 2, (2, 2))
        assert enumerate_support(params) == [(0,), (1,), (2,)]

    def test_census_with_scarce_last_category(self):
        # drawing everything forces k_1 >= n - count_2 = 1 and k_1 <= count_1 = 1,
        # so the support collapses to a single point
        params = validate_params(3, 3, (1, 2))
        assert enumerate_support(params) == [(1,)]

    def test_two_dim_small_count(self):
        params = validate_params(6, 2, (2, 2, 2))
        assert support_size(params) == 6

    def test_support_matrix_matches_enumeration(self):
        params = validate_params(12, 4, (4, 4, 4))
        mat = support_matrix(params)
        assert [tuple(row) for row in mat] == enumerate_support(params)

    def test_count_vectors(self):
        mat = count_vector_matrix(4, 2)
        assert len(mat) == count_vector_size(4, 2) == math.comb(6, 2)
        assert all(row.sum() <= 4 for row in mat)

    def test_cap_via_env(self, monkeypatch):
        params = validate_params(40, 12, (20, 20))
        monkeypatch.setenv(SUPPORT_CAP_ENV, "5")
        with pytest.raises(SupportCapError) as err:
            enumerate_support(params)
        assert err.value.cap == 5
        assert err.value.required == 13

    def test_explicit_cap_beats_env(self, monkeypatch):
        monkeypatch.setenv(SUPPORT_CAP_ENV, "5")
        assert support_cap(1000) == 1000
        params = validate_params(40, 12, (20, 20))
        assert len(enumerate_support(params, cap=1000)) == 13

    def test_point_membership(self):
        params = validate_params(10, 5, (5, 5))
        assert point_in_support(params, (3,))
        assert not point_in_support(params, (6,))
        assert not point_in_support(params, (-1,))
        with pytest.raises(ValidationError):
            point_in_support(params, (1, 1))


class TestTruncatedSet:
    def test_exact_boundary_inclusive(self):
        params = validate_params(8, 4, (4, 4))
        # gamma * count = 3 exactly, so 3 stays in and 4 falls out
        assert in_truncated_set(params, (3,), 0.75)
        assert not in_truncated_set(params, (4,), 0.75)

    def test_gamma_one_keeps_everything(self):
        params = validate_params(8, 4, (4, 4))
        assert all(in_truncated_set(params, p, 1) for p in enumerate_support(params))

    @pytest.mark.parametrize("gamma", [0, -0.5, 1.5])
    def test_gamma_range(self, gamma):
        params = validate_params(8, 4, (4, 4))
        with pytest.raises(ValidationError):
            in_truncated_set(params, (1,), gamma)

    def test_fraction_gamma(self):
        params = validate_params(9, 4, (3, 6))
        assert in_truncated_set(params, (2,), Fraction(2, 3))
        assert not in_truncated_set(params, (3,), Fraction(2, 3))

    def test_balanced_split_three_quarters(self):
        # k=(2): max(k_i / p_i) = max(4, 6) = 6 <= 7.5; k=(5): 10 > 7.5
        params = validate_params(10, 5, (5, 5))
        assert in_truncated_set(params, (2,), 0.75)
        assert not in_truncated_set(params, (5,), 0.75)

    def test_membership_monotone_in_gamma(self):
        params = validate_params(12, 6, (5, 7))
        gammas = [0.4, 0.55, 0.7, 0.85, 1]
        for point in enumerate_support(params):
            flags = [in_truncated_set(params, point, g) for g in gammas]
            # once a point enters the set it stays in for every larger gamma
            assert flags == sorted(flags)


class TestRatioClass:
    def test_weight_ratio(self):
        assert weight_ratio(validate_params(40, 8, (10, 30))) == 3.0

    def test_contains(self):
        cls = RatioClass(4.0)
        assert cls.contains(validate_params(40, 8, (10, 30)))
        assert not cls.contains(validate_params(42, 8, (6, 36)))


@given(experiment_params())
def test_support_invariants(params):
    points = enumerate_support(params)
    assert len(points) == support_size(params)
    assert points == sorted(points)
    assert len(set(points)) == len(points)
    for point in points:
        assert point_in_support(params, point)
        rest = params.sample_size - sum(point)
        assert 0 <= rest <= params.counts[-1]
        assert all(0 <= k <= c for k, c in zip(point, params.counts))


@given(experiment_params(max_dim=2))
def test_support_matches_oracle(params):
    expected = sorted(oracles.support_points(params.counts, params.sample_size))
    assert enumerate_support(params) == expected
