import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given

import oracles
from lecam import (
    ValidationError,
    expand,
    expansion_order1,
    expansion_order2,
    first_order_bracket,
    log_ratio_exact,
    residual_scan,
    second_order_bracket,
    second_order_term,
    validate_params,
)
from strategies import params_with_point

BALANCED = validate_params(10, 5, (5, 5))

DOUBLING_FAMILY = [validate_params(N, 8, (N // 2, N // 2)) for N in (16, 32, 64, 128, 256)]


class TestPointExpansion:
    def test_frozen_exact_log_ratio(self):
        # mpmath oracle: 0.23889190828234892437
        assert log_ratio_exact(BALANCED, (2,)) == pytest.approx(
            0.23889190828234892, abs=1e-14
        )

    def test_frozen_truncations(self):
        assert expansion_order1(BALANCED, (2,)) == pytest.approx(0.2, abs=1e-15)
        assert expansion_order2(BALANCED, (2,)) == pytest.approx(0.23, abs=1e-15)

    def test_residual_identities(self):
        r = expand(BALANCED, (2,))
        assert r.residual1 == pytest.approx(r.exact - r.order1, abs=1e-16)
        assert r.residual2 == pytest.approx(r.exact - r.order2, abs=1e-16)
        assert r.order2 == pytest.approx(
            r.order1 + second_order_term(BALANCED, (2,)), abs=1e-15
        )

    def test_off_support_rejected(self):
        with pytest.raises(ValidationError):
            expand(BALANCED, (6,))

    def test_census_ratio_diverges_nowhere(self):
        # n = 1 makes the two laws identical, so the ratio vanishes
        params = validate_params(10, 1, (5, 5))
        for point in ((0,), (1,)):
            assert log_ratio_exact(params, point) == pytest.approx(0.0, abs=1e-14)

    def test_census_point_mass_ratio(self):
        # drawing everything concentrates the without-replacement law on one
        # point, so the log-ratio there is -ln Q(point) > 0
        params = validate_params(10, 10, (5, 5))
        expected = -math.log(math.comb(10, 5) / 2**10)
        value = log_ratio_exact(params, (5,))
        assert value > 0
        assert value == pytest.approx(expected, abs=1e-13)

    def test_symmetric_full_split_first_order(self):
        # n=2, balanced split, k=(1): the k-bracket vanishes and the n-bracket
        # is 1, leaving exactly 1/N
        for population in (10, 12, 40):
            params = validate_params(population, 2, (population // 2, population // 2))
            assert expansion_order1(params, (1,)) == pytest.approx(1 / population, abs=1e-16)


@given(params_with_point(max_count=6, max_draws=6))
def test_exact_log_ratio_matches_oracle(case):
    params, point = case
    expected = float(
        oracles.log_ratio(params.population, params.counts, params.sample_size, point)
    )
    assert log_ratio_exact(params, point) == pytest.approx(expected, abs=1e-13)


@given(params_with_point(max_count=6, max_draws=6))
def test_brackets_match_oracle_rationals(case):
    params, point = case
    b1 = oracles.bracket1(params.population, params.counts, params.sample_size, point)
    b2 = oracles.bracket2(params.population, params.counts, params.sample_size, point)
    assert first_order_bracket(params, point) == b1 * params.population
    total = second_order_bracket(params, point)
    assert Fraction(total, params.population**2) == b2


class TestResidualScan:
    def test_generic_point_first_order_rate(self):
        scan = residual_scan(DOUBLING_FAMILY, lambda p: (2,), order=1)
        assert not scan.degenerate
        assert scan.fit.slope == pytest.approx(-2.229689204592402, abs=1e-9)
        assert scan.fit.r_squared > 0.99
        assert [r.quantity for r in scan.records] == ["abs_residual_order1"] * 5

    def test_generic_point_second_order_rate(self):
        scan = residual_scan(DOUBLING_FAMILY, lambda p: (2,), order=2)
        assert scan.fit.slope == pytest.approx(-3.2312745772269644, abs=1e-9)
        assert scan.fit.r_squared > 0.99

    def test_mirror_symmetric_point_skips_an_order(self):
        # at the symmetric point the quadratic correction cancels exactly,
        # so the first-order residual already decays at the second-order rate
        assert second_order_bracket(DOUBLING_FAMILY[0], (3,)) == 0
        scan1 = residual_scan(DOUBLING_FAMILY, lambda p: (3,), order=1)
        scan2 = residual_scan(DOUBLING_FAMILY, lambda p: (3,), order=2)
        assert scan1.fit.slope == pytest.approx(scan2.fit.slope, abs=1e-12)
        assert scan1.fit.slope == pytest.approx(-3.2811492280226093, abs=1e-9)

    def test_identical_laws_are_degenerate(self):
        family = [validate_params(N, 1, (N // 2, N // 2)) for N in (16, 32, 64, 128)]
        scan = residual_scan(family, lambda p: (1,), order=1)
        assert scan.degenerate
        assert scan.fit is None

    def test_truncation_violation_rejected(self):
        with pytest.raises(ValidationError):
            residual_scan(DOUBLING_FAMILY, lambda p: (2,), order=1, gamma=0.2)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, 1.2])
    def test_gamma_must_be_interior(self, gamma):
        with pytest.raises(ValidationError):
            residual_scan(DOUBLING_FAMILY, lambda p: (2,), order=1, gamma=gamma)

    def test_parallel_matches_serial(self):
        serial = residual_scan(DOUBLING_FAMILY, lambda p: (2,), order=1, jobs=1)
        parallel = residual_scan(DOUBLING_FAMILY, lambda p: (2,), order=1, jobs=2)
        assert serial.records == parallel.records

    def test_empty_family_rejected(self):
        with pytest.raises(ValidationError):
            residual_scan([], lambda p: (2,), order=1)


def test_residuals_shrink_with_population():
    values = [abs(expand(p, (2,)).residual1) for p in DOUBLING_FAMILY]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_oracle_brackets_reproduce_mpmath_expansion():
    # sanity check of the oracle itself on the frozen balanced case
    b1 = oracles.bracket1(10, (5, 5), 5, (2,))
    b2 = oracles.bracket2(10, (5, 5), 5, (2,))
    assert b1 == Fraction(1, 5)
    assert b1 + b2 == Fraction(23, 100)
    exact = oracles.log_ratio(10, (5, 5), 5, (2,))
    assert abs(float(exact) - 0.23889190828234892) < 1e-15
    assert mpmath.isfinite(exact)
