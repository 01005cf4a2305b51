"""Exact log-ratio of the two sampling laws and its local polynomial expansions.

The log-ratio log(P_without / Q_with) admits a 1/N expansion whose brackets
are exact rationals in (n, k, counts).  The first-order term decays like
1/N with an N^-2 remainder on the truncated set, the second-order term
tightens the remainder to N^-3.  ``residual_scan`` measures those decay
exponents empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import ValidationError
from .lattice import (
    ExperimentParams,
    LatticePoint,
    full_counts,
    in_truncated_set,
    point_in_support,
)
from .numerics import SlopeFit, fit_loglog_slope, log_factorial
from .records import ScanRecord

DEFAULT_TRUNCATION = 0.75
# Residuals below this are indistinguishable from exact cancellation.
DEGENERATE_RESIDUAL = 1e-14


@dataclass(frozen=True)
class ExpansionResult:
    """Exact log-ratio next to its two polynomial approximations."""

    exact: float
    order1: float
    order2: float
    residual1: float
    residual2: float


def log_ratio_exact(params: ExperimentParams, point: Sequence[int]) -> float:
    """log of (without-replacement pmf / with-replacement pmf) at one point.

    Assembled term by term from log-factorials after cancelling the common
    k_i! and n! factors analytically, so the two nearly equal log-pmfs are
    never subtracted as rounded wholes.
    """
    if not point_in_support(params, point):
        raise ValidationError(
            f"point {tuple(point)} lies outside the support; the ratio is undefined"
        )
    N = params.population
    n = params.sample_size
    ks = full_counts(params, point)
    terms = []
    for c, k in zip(params.counts, ks):
        terms.append(log_factorial(c) - log_factorial(c - k))
        terms.append(-k * math.log(c / N))
    terms.append(log_factorial(N - n) - log_factorial(N))
    return math.fsum(terms)


def first_order_bracket(params: ExperimentParams, point: Sequence[int]) -> Fraction:
    """Exact bracket (n^2/2 - n/2) - sum_i (1/p_i)(k_i^2/2 - k_i/2)."""
    N = params.population
    n = params.sample_size
    ks = full_counts(params, point)
    total = Fraction(n * n - n, 2)
    for c, k in zip(params.counts, ks):
        total -= Fraction(N, c) * Fraction(k * k - k, 2)
    return total


def _cubic_piece(t: int) -> Fraction:
    # t^3/6 - t^2/4 + t/12 == t (t - 1)(2 t - 1) / 12
    return Fraction(t * (t - 1) * (2 * t - 1), 12)


def second_order_bracket(params: ExperimentParams, point: Sequence[int]) -> Fraction:
    """Exact bracket (n^3/6 - n^2/4 + n/12) - sum_i (1/p_i^2)(same cubic in k_i)."""
    N = params.population
    ks = full_counts(params, point)
    total = _cubic_piece(params.sample_size)
    for c, k in zip(params.counts, ks):
        total -= Fraction(N, c) ** 2 * _cubic_piece(k)
    return total


def expansion_order1(params: ExperimentParams, point: Sequence[int]) -> float:
    """First-order approximation: bracket over N."""
    return float(first_order_bracket(params, point) / params.population)


def second_order_term(params: ExperimentParams, point: Sequence[int]) -> float:
    """The N^-2 correction added on top of the first order."""
    return float(second_order_bracket(params, point) / params.population**2)


def expansion_order2(params: ExperimentParams, point: Sequence[int]) -> float:
    """Second-order approximation: both brackets, exact rational arithmetic."""
    N = params.population
    total = (
        first_order_bracket(params, point) / N
        + second_order_bracket(params, point) / N**2
    )
    return float(total)


def expand(params: ExperimentParams, point: Sequence[int]) -> ExpansionResult:
    """Exact log-ratio together with both approximations and their residuals."""
    exact = log_ratio_exact(params, point)
    o1 = expansion_order1(params, point)
    o2 = expansion_order2(params, point)
    return ExpansionResult(
        exact=exact,
        order1=o1,
        order2=o2,
        residual1=exact - o1,
        residual2=exact - o2,
    )


@dataclass(frozen=True)
class ResidualScan:
    """Residual magnitudes across a family plus the fitted decay exponent."""

    records: tuple[ScanRecord, ...]
    fit: SlopeFit | None
    degenerate: bool


def residual_scan(
    family: Sequence[ExperimentParams],
    k_rule: Callable[[ExperimentParams], Sequence[int]],
    order: int,
    gamma=DEFAULT_TRUNCATION,
    jobs: int = 1,
) -> ResidualScan:
    """Measure |exact - approximation| along a family of growing populations.

    Every (params, k) pair must lie in the gamma-truncated set.  Residuals
    that vanish identically (a family sitting on a zero of the next bracket,
    or the single-draw case) are reported as degenerate instead of fitted.
    """
    if len(family) == 0:
        raise ValidationError("residual_scan requires a non-empty family")
    if order not in (1, 2):
        raise ValidationError("order must be 1 or 2")
    g = Fraction(gamma)
    if not 0 < g < 1:
        raise ValidationError("gamma must lie in (0, 1) for a residual scan")
    tasks = []
    for params in family:
        point = tuple(int(v) for v in k_rule(params))
        if not in_truncated_set(params, point, g):
            raise ValidationError(
                f"point {point} violates the gamma={float(g)} truncation at "
                f"population {params.population}"
            )
        tasks.append((params, point, order))
    results = _map_ordered(_residual_point, tasks, jobs)
    records = tuple(results)
    values = [r.value for r in records]
    if all(v <= DEGENERATE_RESIDUAL for v in values):
        return ResidualScan(records=records, fit=None, degenerate=True)
    positive = [(r.population, r.value) for r in records if r.value > DEGENERATE_RESIDUAL]
    if len(positive) < 4:
        return ResidualScan(records=records, fit=None, degenerate=True)
    fit = fit_loglog_slope([x for x, _ in positive], [y for _, y in positive])
    return ResidualScan(records=records, fit=fit, degenerate=False)


def _residual_point(task: tuple[ExperimentParams, LatticePoint, int]) -> ScanRecord:
    params, point, order = task
    result = expand(params, point)
    residual = result.residual1 if order == 1 else result.residual2
    return ScanRecord(
        population=params.population,
        sample_size=params.sample_size,
        dim=params.dim,
        weights=params.weights,
        quantity=f"abs_residual_order{order}",
        value=abs(residual),
        error=0.0,
        method="exact-log-ratio",
    )


def _map_ordered(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
