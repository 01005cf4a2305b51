import math

import numpy as np
import pytest
from scipy import integrate, stats

from lecam import (
    KERNEL_KINDS,
    KernelTag,
    RegimeError,
    ValidationError,
    apply_jitter,
    apply_kernel,
    apply_round,
    build_gaussian,
    data_processing_check,
    deficiency_upper_bounds,
    independent_gaussian,
    make_generator,
    multinomial_log_pmf,
    sample_multinomial,
    sqrt_vst_pushforward,
    sqrt_vst_target,
    tv_jittered_discrete_pair,
    tv_jittered_vs_gaussian,
    validate_params,
)

WIDE = validate_params(64, 8, (32, 32))
THREE_CAT = validate_params(12, 4, (4, 4, 4))

# Phi(-sqrt(8)), mpmath oracle: mass a N(8, 8) variate puts below zero
CLAMP_MASS = 0.0023388674905236329


class TestJitterRound:
    def test_jitter_stays_in_open_cube(self):
        rng = make_generator(0)
        cloud = apply_jitter((3, 1), rng, size=20_000)
        assert cloud.shape == (20_000, 2)
        offsets = cloud - np.array([3.0, 1.0])
        assert (offsets > -0.5).all() and (offsets < 0.5).all()

    def test_jitter_is_centered(self):
        rng = make_generator(1)
        cloud = apply_jitter((5,), rng, size=200_000)
        assert cloud.mean() == pytest.approx(5.0, abs=0.005)

    def test_round_inverts_jitter(self):
        rng = make_generator(2)
        points = rng.integers(-50, 50, size=(10_000, 3))
        recovered = apply_round(apply_jitter(points, rng))
        assert (recovered == points).all()

    def test_round_halves_away_from_zero(self):
        assert apply_round((0.5, -0.5, 2.5, -2.5)) == (1, -1, 3, -3)
        assert apply_round((0.49, -0.49)) == (0, 0)

    def test_jitter_is_uniform_within_cube(self):
        rng = make_generator(11)
        cloud = apply_jitter((0,), rng, size=1_000_000)
        bins = np.bincount(((cloud[:, 0] + 0.5) * 10).astype(int), minlength=10)
        result = stats.chisquare(bins)
        assert result.pvalue > 0.001

    def test_round_pushforward_recovers_discrete_law(self):
        # jitter then round is a lossless cycle in distribution, so rounded
        # jittered samples must reproduce the sampling frequencies
        weights = (1 / 3, 2 / 3)
        rng = make_generator(12)
        draws = np.asarray(sample_multinomial(6, weights, rng, size=1_000_000))
        rounded = apply_round(apply_jitter(draws, rng))
        assert rounded.shape == draws.shape
        total = len(rounded)
        for k in range(7):
            prob = math.exp(multinomial_log_pmf(6, weights, (k,)))
            freq = float(np.mean(rounded[:, 0] == k))
            se = math.sqrt(prob * (1 - prob) / total)
            assert abs(freq - prob) < 4 * se

    def test_kernel_tags(self):
        assert set(KERNEL_KINDS) == {"jitter", "round", "sqrt_vst"}
        rng = make_generator(3)
        jittered = apply_kernel(KernelTag("jitter"), (2, 2), rng)
        assert (apply_kernel(KernelTag("round"), jittered) == np.array([2, 2])).all()
        assert apply_kernel(KernelTag("sqrt_vst"), (4.0,)) == pytest.approx([2.0])
        with pytest.raises(ValidationError):
            KernelTag("copula")
        with pytest.raises(ValidationError):
            apply_kernel(KernelTag("jitter"), (2, 2))


class TestSqrtVst:
    def test_pushforward_clamps_and_roots(self):
        out = sqrt_vst_pushforward(np.array([-3.0, 0.0, 9.0]))
        assert out == pytest.approx([0.0, 0.0, 3.0])

    def test_target_moments(self):
        params = validate_params(32, 16, (16, 16))
        law = sqrt_vst_target(params)
        assert law.mean == pytest.approx([math.sqrt(8)])
        assert law.covariance == pytest.approx(np.array([[0.25]]))

    def test_clamp_frequency_matches_gaussian_tail(self):
        # N(8, 8) sends mass Phi(-sqrt(8)) below zero; the clamp picks it up
        params = validate_params(32, 16, (16, 16))
        law = independent_gaussian(params)
        assert law.mean == pytest.approx([8.0])
        assert law.covariance == pytest.approx(np.array([[8.0]]))
        rng = make_generator(7)
        draws = rng.normal(law.mean[0], math.sqrt(law.covariance[0, 0]), size=400_000)
        clamped = np.mean(sqrt_vst_pushforward(draws) == 0.0)
        se = math.sqrt(CLAMP_MASS * (1 - CLAMP_MASS) / 400_000)
        assert abs(clamped - CLAMP_MASS) < 5 * se

    @staticmethod
    def _pushforward_tv(sample_size: int) -> float:
        """TV between the root image of N(np, np) and its constant-variance
        target, by direct density integration in one dimension."""
        params = validate_params(4 * sample_size, sample_size,
                                 (2 * sample_size, 2 * sample_size))
        base_law = independent_gaussian(params)
        target_law = sqrt_vst_target(params)
        base = stats.norm(base_law.mean[0], math.sqrt(base_law.covariance[0, 0]))
        target = stats.norm(target_law.mean[0], math.sqrt(target_law.covariance[0, 0]))
        atom = base.cdf(0.0)
        diff = lambda y: abs(2 * y * base.pdf(y * y) - target.pdf(y))
        inside, _ = integrate.quad(diff, 0, target_law.mean[0] + 12, limit=400)
        return 0.5 * (atom + inside + target.cdf(0.0))

    def test_pushforward_approaches_target(self):
        values = [self._pushforward_tv(n) for n in (4, 16, 64)]
        assert values[0] > values[1] > values[2]
        # frozen reference from the same integral run at high precision
        assert values[1] == pytest.approx(0.05315134036151904, abs=1e-6)
        assert values[2] < 0.03


class TestDeficiency:
    def test_matches_jittered_tv(self):
        report = deficiency_upper_bounds(WIDE, quad_order=8)
        law = build_gaussian(WIDE)
        tv = tv_jittered_vs_gaussian(WIDE, "hyper", law, 8)
        assert report.delta_P_to_Q == pytest.approx(tv.value, abs=1e-14)
        assert report.delta_Q_to_P == pytest.approx(tv.value, abs=1e-14)
        assert report.le_cam_upper == max(report.delta_P_to_Q, report.delta_Q_to_P)
        assert report.method == "cube-quadrature"

    def test_budget_scale(self):
        report = deficiency_upper_bounds(WIDE, quad_order=8)
        assert report.budget == pytest.approx(1 / math.sqrt(8), abs=1e-15)
        skew = validate_params(40, 8, (10, 30))
        report = deficiency_upper_bounds(skew, quad_order=8)
        assert report.budget == pytest.approx(math.sqrt(3) / math.sqrt(8), abs=1e-14)

    def test_regime_guard(self):
        with pytest.raises(RegimeError):
            deficiency_upper_bounds(validate_params(10, 8, (5, 5)))

    def test_mc_route(self):
        quad = deficiency_upper_bounds(WIDE, quad_order=8)
        mc = deficiency_upper_bounds(WIDE, tv_method="mc", sample_count=200_000, seed=3)
        assert mc.method == "monte-carlo"
        assert abs(mc.le_cam_upper - quad.le_cam_upper) < 4 * mc.error_estimate

    def test_bad_method_rejected(self):
        with pytest.raises(ValidationError):
            deficiency_upper_bounds(WIDE, tv_method="bootstrap")

    def test_monotone_along_cubic_population_growth(self):
        reports = [
            deficiency_upper_bounds(
                validate_params(n**3, n, (n**3 // 2, n**3 // 2)), quad_order=8
            )
            for n in (4, 8, 16)
        ]
        for earlier, later in zip(reports, reports[1:]):
            assert (later.le_cam_upper
                    <= earlier.le_cam_upper + earlier.error_estimate + later.error_estimate)

    @pytest.mark.parametrize("population,draws,counts",
                             [(64, 8, (32, 32)), (40, 8, (10, 30))])
    def test_bounded_by_proof_decomposition(self, population, draws, counts):
        # the bound never exceeds the two-hop route through the jittered pair
        params = validate_params(population, draws, counts)
        report = deficiency_upper_bounds(params, quad_order=8)
        law = build_gaussian(params)
        pair = tv_jittered_discrete_pair(params, "hyper", "multi")
        leg = tv_jittered_vs_gaussian(params, "multi", law, 8)
        combined = report.error_estimate + pair.error_estimate + leg.error_estimate
        assert report.le_cam_upper <= pair.value + leg.value + combined


class TestDataProcessing:
    def test_rounding_cannot_grow_tv(self):
        result = data_processing_check(WIDE, quad_order=8)
        assert result.tv_after <= result.tv_before + result.combined_error
        assert result.slack == pytest.approx(
            result.tv_before - result.tv_after, abs=1e-16
        )
        assert result.combined_error == result.error_before + result.error_after

    def test_two_dimensional_case(self):
        result = data_processing_check(THREE_CAT, quad_order=6)
        assert result.slack >= -result.combined_error

    @pytest.mark.parametrize(
        "population,draws,counts",
        [(16, 4, (8, 8)), (24, 6, (12, 12)), (24, 6, (6, 18)), (18, 4, (6, 6, 6))],
    )
    def test_slack_nonnegative_across_instances(self, population, draws, counts):
        params = validate_params(population, draws, counts)
        result = data_processing_check(params, quad_order=6)
        assert result.slack >= -1e-8
