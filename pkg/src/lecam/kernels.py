"""Markov kernels connecting the lattice and Gaussian experiments.

Two kernels carry observations back and forth: jittering (add uniform noise
on the centered unit cube) turns a lattice draw into a continuous one, and
rounding inverts it.  Because rounding a jittered point always recovers the
original point, a data-processing argument turns a one-sided total-variation
bound into a bound on both deficiencies at once; ``data_processing_check``
validates that chain numerically.  A componentwise square root provides the
variance-stabilizing map onto a constant-covariance Gaussian target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .distances import (
    DEFAULT_QUAD_ORDER,
    GaussianLaw,
    _gaussian_cube_masses,
    build_gaussian,
    tv_jittered_vs_gaussian,
    tv_monte_carlo,
)
from .errors import RegimeError, SupportCapError, ValidationError
from .lattice import ExperimentParams, support_cap, weight_ratio
from .numerics import round_half_away
from .pmf import hypergeometric_log_pmf_matrix

KERNEL_KINDS = ("jitter", "round", "sqrt_vst")


@dataclass(frozen=True)
class KernelTag:
    """Names one of the three kernels; none of them takes parameters."""

    kind: str

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValidationError(f"kind must be one of {KERNEL_KINDS}")


@dataclass(frozen=True)
class DeficiencyReport:
    """Upper bounds on both one-sided deficiencies and their maximum.

    ``budget`` is the reference scale d/sqrt(n) * sqrt(max p / min p) that
    the bounds are expected to track; it is reported, never asserted.
    """

    delta_P_to_Q: float
    delta_Q_to_P: float
    le_cam_upper: float
    budget: float
    error_estimate: float
    method: str


class DataProcessingResult(NamedTuple):
    """TV before and after rounding the Gaussian onto the lattice."""

    tv_before: float
    tv_after: float
    slack: float
    error_before: float
    error_after: float

    @property
    def combined_error(self) -> float:
        return self.error_before + self.error_after


def apply_jitter(point: Sequence[int], rng: np.random.Generator, size: int | None = None):
    """Add uniform noise on (-1/2, 1/2)^d to a lattice point.

    With ``size`` given, returns (size, d) jittered copies of the point or,
    when ``point`` is an (m, d) array and size is None, one draw per row.
    """
    arr = np.asarray(point, dtype=float)
    if arr.ndim == 1 and size is not None:
        arr = np.broadcast_to(arr, (int(size), arr.size))
    noise = rng.random(arr.shape) - 0.5
    if arr.ndim >= 1:
        flat = noise.reshape(-1)
        flat[flat == -0.5] = 0.0  # rng.random can return exactly 0; stay in the open cube
    return arr + noise


def apply_round(z):
    """Componentwise nearest integer, halves away from zero.

    The result is a lattice-point candidate: it may fall outside the support,
    in which case downstream laws simply assign it probability zero.
    """
    rounded = round_half_away(z)
    if isinstance(z, tuple):
        return tuple(int(v) for v in rounded)
    return rounded


def apply_kernel(tag: KernelTag, value, rng: np.random.Generator | None = None):
    """Dispatch on the kernel tag."""
    if tag.kind == "jitter":
        if rng is None:
            raise ValidationError("the jitter kernel needs an rng")
        return apply_jitter(value, rng)
    if tag.kind == "round":
        return apply_round(value)
    return sqrt_vst_pushforward(value)


def independent_gaussian(params: ExperimentParams) -> GaussianLaw:
    """Gaussian with matching means and variances but independent coordinates."""
    n = params.sample_size
    p = np.asarray(params.weights[: params.dim], dtype=float)
    return GaussianLaw.from_moments(n * p, np.diag(n * p))


def sqrt_vst_target(params: ExperimentParams) -> GaussianLaw:
    """Constant-covariance image of the independent Gaussian under the root map."""
    n = params.sample_size
    p = np.asarray(params.weights[: params.dim], dtype=float)
    return GaussianLaw.from_moments(np.sqrt(n * p), np.diag(np.full(params.dim, 0.25)))


def sqrt_vst_pushforward(sample):
    """Componentwise sqrt(max(z, 0)).

    Negative components clamp to zero before the root; the clamping
    probability decays quickly as the sample size grows.
    """
    arr = np.asarray(sample, dtype=float)
    return np.sqrt(np.clip(arr, 0.0, None))


def deficiency_upper_bounds(
    params: ExperimentParams,
    tv_method: str = "quadrature",
    quad_order: int = DEFAULT_QUAD_ORDER,
    sample_count: int = 1_000_000,
    seed: int = 0,
    cap: int | None = None,
) -> DeficiencyReport:
    """Upper bounds on both deficiencies between the two experiments.

    The jitter kernel carries the lattice experiment into the Gaussian one,
    so TV(jittered law, Gaussian) bounds that deficiency; rounding the
    Gaussian back can only shrink TV, so the same number bounds the reverse
    deficiency as well.  Both fields therefore carry the same value, and
    ``data_processing_check`` verifies the shrinking step numerically.
    """
    n = params.sample_size
    N = params.population
    if 4 * n > 3 * N:
        raise RegimeError(
            f"sample_size {n} exceeds three quarters of population {N}"
        )
    law = build_gaussian(params)
    if tv_method in ("quadrature", "quad"):
        tv = tv_jittered_vs_gaussian(params, "hypergeometric", law, quad_order, cap=cap)
    elif tv_method == "mc":
        tv = tv_monte_carlo(params, "hypergeometric", law, sample_count, seed)
    else:
        raise ValidationError("tv_method must be 'quadrature' or 'mc'")
    budget = params.dim / math.sqrt(n) * math.sqrt(weight_ratio(params))
    delta_forward = tv.value
    delta_backward = tv.value
    return DeficiencyReport(
        delta_P_to_Q=delta_forward,
        delta_Q_to_P=delta_backward,
        le_cam_upper=max(delta_forward, delta_backward),
        budget=budget,
        error_estimate=tv.error_estimate,
        method=tv.method,
    )


def _round_pushforward_box(params: ExperimentParams, law: GaussianLaw, tail_sigmas: float):
    """Integer box certain to carry all but a negligible sliver of mass."""
    sigmas = np.sqrt(np.diag(law.covariance))
    lo = np.minimum(0, np.floor(law.mean - tail_sigmas * sigmas)).astype(np.int64)
    hi_support = np.minimum(
        np.asarray(params.counts[: params.dim], dtype=np.int64), params.sample_size
    )
    hi = np.maximum(hi_support, np.ceil(law.mean + tail_sigmas * sigmas)).astype(np.int64)
    return lo, hi


def data_processing_check(
    params: ExperimentParams,
    quad_order: int = DEFAULT_QUAD_ORDER,
    tail_sigmas: float = 8.5,
    cap: int | None = None,
) -> DataProcessingResult:
    """Check that rounding the Gaussian onto the lattice shrinks the TV.

    tv_before compares the jittered lattice law with the Gaussian; tv_after
    compares the lattice law with the rounded Gaussian, whose mass function
    is the Gaussian measure of each unit cube.  Data processing guarantees
    tv_after <= tv_before; slack is the measured difference.
    """
    law = build_gaussian(params)
    before = tv_jittered_vs_gaussian(params, "hypergeometric", law, quad_order, cap=cap)
    lo, hi = _round_pushforward_box(params, law, tail_sigmas)
    box_size = int(np.prod((hi - lo + 1).astype(object)))
    limit = support_cap(cap)
    if box_size > limit:
        raise SupportCapError(
            f"pushforward box has {box_size} points, above the cap of {limit}",
            required=box_size,
            cap=limit,
        )
    axes = [np.arange(l, h + 1) for l, h in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([g.ravel() for g in grids], axis=1)
    pmf = np.exp(hypergeometric_log_pmf_matrix(params, centers))

    def rounded_tv(order: int) -> float:
        masses = _gaussian_cube_masses(law, centers.astype(float), 0.5, order)
        inside = math.fsum(np.abs(pmf - masses).tolist())
        outside = max(0.0, 1.0 - math.fsum(masses.tolist()))
        return 0.5 * (inside + outside)

    tv_after = rounded_tv(quad_order)
    tv_after_lo = rounded_tv(max(2, quad_order // 2))
    err_after = abs(tv_after - tv_after_lo) + 1e-12
    return DataProcessingResult(
        tv_before=before.value,
        tv_after=tv_after,
        slack=before.value - tv_after,
        error_before=before.error_estimate,
        error_after=err_after,
    )
