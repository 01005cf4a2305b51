"""Experiment parameters, lattice supports, and truncation regions.

The sampling experiment draws ``sample_size`` objects without replacement
from a population of ``population`` objects split into ``dim + 1``
categories.  Category weights are stored as the exact integer counts
``population * p_i`` so that normalization and membership checks never
involve floating-point rounding.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Sequence

import numpy as np

from .errors import SupportCapError, ValidationError

DEFAULT_SUPPORT_CAP = 10_000_000
SUPPORT_CAP_ENV = "LECAM_SUPPORT_CAP"

# First dim category counts; the last count is derived as sample_size - sum.
LatticePoint = tuple[int, ...]


@dataclass(frozen=True)
class ExperimentParams:
    """Population size, sample size, and exact integer category weights."""

    population: int
    sample_size: int
    counts: tuple[int, ...]  # population * p_i for every category; sums to population

    @property
    def dim(self) -> int:
        """Number of free coordinates (one less than the category count)."""
        return len(self.counts) - 1

    @property
    def weights(self) -> tuple[float, ...]:
        """Category probabilities as floats, length dim + 1."""
        return tuple(c / self.population for c in self.counts)

    @property
    def weight_fractions(self) -> tuple[Fraction, ...]:
        """Category probabilities as exact fractions, length dim + 1."""
        return tuple(Fraction(c, self.population) for c in self.counts)


def validate_params(
    population: int,
    sample_size: int,
    weights: Sequence,
    dim: int | None = None,
) -> ExperimentParams:
    """Validate and build an :class:`ExperimentParams`.

    ``weights`` may be integer counts summing to ``population`` or exact
    rationals summing to 1 whose denominators divide ``population``.  Floats
    are rejected: the lattice constraint is exact and so is its check.
    """
    if not isinstance(population, (int, np.integer)) or population < 1:
        raise ValidationError("population must be a positive integer")
    if not isinstance(sample_size, (int, np.integer)) or sample_size < 1:
        raise ValidationError("sample_size must be a positive integer")
    if sample_size > population:
        raise ValidationError(
            f"sample_size {sample_size} exceeds population {population}"
        )
    if len(weights) < 2:
        raise ValidationError("at least two category weights are required")
    counts: list[int] = []
    for w in weights:
        if isinstance(w, (bool, float)) or not isinstance(w, (Rational, np.integer)):
            raise ValidationError(
                "weights must be integer counts or exact rationals, not floats"
            )
        frac = Fraction(w)
        # Integer inputs are counts; proper fractions are probabilities.
        if frac.denominator == 1 and frac >= 1:
            count = int(frac)
        else:
            count_frac = frac * population
            if count_frac.denominator != 1:
                raise ValidationError(
                    f"weight {w} times population {population} is not an integer"
                )
            count = int(count_frac)
        if count < 1:
            raise ValidationError("every category weight must be strictly positive")
        counts.append(count)
    total = sum(counts)
    if total != population:
        raise ValidationError(
            f"weights sum to {Fraction(total, population)} of the population, expected 1"
        )
    if dim is not None and dim != len(counts) - 1:
        raise ValidationError(
            f"dim {dim} does not match {len(counts)} category weights"
        )
    return ExperimentParams(int(population), int(sample_size), tuple(counts))


def support_cap(explicit: int | None = None) -> int:
    """Effective enumeration cap: explicit argument, else env override, else default."""
    if explicit is not None:
        if explicit < 1:
            raise ValidationError("support cap must be a positive integer")
        return int(explicit)
    raw = os.environ.get(SUPPORT_CAP_ENV)
    if raw is None:
        return DEFAULT_SUPPORT_CAP
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(
            f"{SUPPORT_CAP_ENV} must be an integer, got {raw!r}"
        ) from None
    if value < 1:
        raise ValidationError(f"{SUPPORT_CAP_ENV} must be positive, got {value}")
    return value


def _bounded_vector_count(counts: Sequence[int], total: int) -> int:
    """Number of integer vectors with 0 <= k_i <= counts[i] and sum == total."""
    ways = [1] + [0] * total
    for c in counts:
        prefix = [0]
        for w in ways:
            prefix.append(prefix[-1] + w)
        ways = [prefix[s + 1] - prefix[max(0, s - c)] for s in range(total + 1)]
    return ways[total]


def support_size(params: ExperimentParams) -> int:
    """Exact number of lattice points in the support."""
    return _bounded_vector_count(params.counts, params.sample_size)


def _iter_bounded_vectors(counts: Sequence[int], total: int) -> Iterator[LatticePoint]:
    """Lexicographically increasing k over the first len(counts)-1 coordinates."""
    head = len(counts) - 1
    # suffix_capacity[i] = how much the categories after i can absorb in total
    suffix_capacity = [0] * head
    acc = 0
    for i in range(head - 1, -1, -1):
        acc += counts[i + 1]
        suffix_capacity[i] = acc
    point = [0] * head

    def rec(i: int, remaining: int) -> Iterator[LatticePoint]:
        if i == head:
            if remaining <= counts[-1]:
                yield tuple(point)
            return
        lo = max(0, remaining - suffix_capacity[i])
        hi = min(counts[i], remaining)
        for k in range(lo, hi + 1):
            point[i] = k
            yield from rec(i + 1, remaining - k)

    yield from rec(0, total)


def enumerate_support(params: ExperimentParams, cap: int | None = None) -> list[LatticePoint]:
    """Every support point exactly once, in lexicographic order.

    Raises :class:`SupportCapError` when the support is larger than the cap;
    callers should fall back to the Monte Carlo paths in that case.
    """
    size = support_size(params)
    limit = support_cap(cap)
    if size > limit:
        raise SupportCapError(
            f"support has {size} points, above the cap of {limit}; "
            "use the Monte Carlo paths instead",
            required=size,
            cap=limit,
        )
    return list(_iter_bounded_vectors(params.counts, params.sample_size))


def support_matrix(params: ExperimentParams, cap: int | None = None) -> np.ndarray:
    """Support points as an (m, dim) int64 array in lexicographic order."""
    pts = enumerate_support(params, cap)
    return np.asarray(pts, dtype=np.int64).reshape(len(pts), params.dim)


def count_vector_size(sample_size: int, dim: int) -> int:
    """Number of non-negative integer vectors of length dim with sum <= sample_size."""
    return math.comb(sample_size + dim, dim)


def count_vector_matrix(sample_size: int, dim: int, cap: int | None = None) -> np.ndarray:
    """All k >= 0 with ||k||_1 <= sample_size, as an (m, dim) array, lex order.

    This is the support of the with-replacement law, a superset of every
    without-replacement support with the same sample size.
    """
    size = count_vector_size(sample_size, dim)
    limit = support_cap(cap)
    if size > limit:
        raise SupportCapError(
            f"count-vector set has {size} points, above the cap of {limit}",
            required=size,
            cap=limit,
        )
    counts = (sample_size,) * (dim + 1)
    pts = list(_iter_bounded_vectors(counts, sample_size))
    return np.asarray(pts, dtype=np.int64).reshape(len(pts), dim)


def last_count(params: ExperimentParams, point: Sequence[int]) -> int:
    """Derived final coordinate sample_size - ||k||_1."""
    return params.sample_size - int(sum(point))


def full_counts(params: ExperimentParams, point: Sequence[int]) -> tuple[int, ...]:
    """The point extended with its derived final coordinate."""
    return tuple(int(k) for k in point) + (last_count(params, point),)


def point_in_support(params: ExperimentParams, point: Sequence[int]) -> bool:
    """Membership test for the without-replacement support."""
    if len(point) != params.dim:
        raise ValidationError(
            f"point has {len(point)} coordinates, expected {params.dim}"
        )
    ks = full_counts(params, point)
    return all(0 <= k <= c for k, c in zip(ks, params.counts))


def require_support_point(params: ExperimentParams, point: Sequence[int]) -> LatticePoint:
    """Validate membership and return the point as a tuple."""
    if not point_in_support(params, point):
        raise ValidationError(f"point {tuple(point)} lies outside the support")
    return tuple(int(k) for k in point)


def in_truncated_set(params: ExperimentParams, point: Sequence[int], gamma) -> bool:
    """True iff max_i k_i / p_i <= gamma * population, exactly.

    ``gamma`` may be a float or Fraction in (0, 1]; the comparison uses exact
    rational arithmetic on the stored integer counts.
    """
    g = Fraction(gamma)
    if not 0 < g <= 1:
        raise ValidationError("gamma must lie in (0, 1]")
    if not point_in_support(params, point):
        raise ValidationError(f"point {tuple(point)} lies outside the support")
    ks = full_counts(params, point)
    # k_i / p_i <= g N  <=>  k_i <= g * counts_i
    return all(Fraction(k) <= g * c for k, c in zip(ks, params.counts))


@dataclass(frozen=True)
class RatioClass:
    """Parameter class with a bounded ratio of extreme category weights."""

    ratio_bound: float

    def __post_init__(self):
        if not self.ratio_bound >= 1.0:
            raise ValidationError("ratio_bound must be at least 1")

    def contains(self, params: ExperimentParams) -> bool:
        """True iff max_i p_i / min_i p_i <= ratio_bound, exactly."""
        hi = max(params.counts)
        lo = min(params.counts)
        return Fraction(hi, lo) <= Fraction(self.ratio_bound)


def weight_ratio(params: ExperimentParams) -> float:
    """max_i p_i / min_i p_i."""
    return max(params.counts) / min(params.counts)
