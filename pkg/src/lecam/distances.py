"""Total variation and Hellinger computations between the sampling laws
and their Gaussian limits.

Three kinds of laws appear: the two discrete sampling laws, their jittered
versions (lattice draw plus uniform noise on the centered unit cube, giving
a density that is constant on unit cubes), and Gaussian laws with matching
moments.  Discrete pairs are summed exactly; jittered-versus-Gaussian pairs
are integrated cube by cube with tensor-product Gauss-Legendre rules, with
recursive bisection where the integrand |pmf - density| has a kink; a
Monte Carlo estimator covers everything beyond dimension three.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import RegimeError, ValidationError
from .lattice import (
    ExperimentParams,
    count_vector_matrix,
    support_matrix,
    weight_ratio,
)
from .numerics import (
    log_binomial,
    log_binomial_array,
    make_generator,
    round_half_away,
    split_seed,
)
from .pmf import (
    hypergeometric_log_pmf_matrix,
    multinomial_log_pmf_matrix,
    sample_hypergeometric,
    sample_multinomial,
)

HYPERGEOMETRIC = "hypergeometric"
MULTINOMIAL = "multinomial"
_LAW_ALIASES = {
    "hyper": HYPERGEOMETRIC,
    "hypergeometric": HYPERGEOMETRIC,
    "multi": MULTINOMIAL,
    "multinomial": MULTINOMIAL,
}

DEFAULT_QUAD_ORDER = 8
MAX_QUAD_DIM = 3
MAX_BISECTION_DEPTH = 6
MIN_MC_SAMPLES = 10_000
_MC_CHUNK = 1 << 20

METHOD_EXACT = "exact-discrete"
METHOD_QUAD = "cube-quadrature"
METHOD_MC = "monte-carlo"


def _canonical_law(name: str) -> str:
    try:
        return _LAW_ALIASES[name.lower()]
    except KeyError:
        raise ValidationError(
            f"unknown law {name!r}; expected one of {sorted(set(_LAW_ALIASES))}"
        ) from None


@dataclass(frozen=True, eq=False)
class GaussianLaw:
    """Multivariate normal with a cached Cholesky factor of its covariance."""

    mean: np.ndarray
    covariance: np.ndarray
    cholesky_factor: np.ndarray

    @classmethod
    def from_moments(cls, mean, covariance) -> "GaussianLaw":
        mean = np.asarray(mean, dtype=float)
        covariance = np.asarray(covariance, dtype=float)
        if mean.ndim != 1 or covariance.shape != (mean.size, mean.size):
            raise ValidationError("mean must be a d-vector and covariance d x d")
        if not np.allclose(covariance, covariance.T, rtol=0.0, atol=1e-12):
            raise ValidationError("covariance must be symmetric")
        try:
            factor = np.linalg.cholesky(covariance)
        except np.linalg.LinAlgError:
            raise ValidationError("covariance must be positive definite") from None
        return cls(mean=mean, covariance=covariance, cholesky_factor=factor)

    @property
    def dim(self) -> int:
        return self.mean.size

    def log_density(self, x):
        """Log-density at x, shape (d,) or (m, d); returns scalar or (m,)."""
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        pts = np.atleast_2d(arr)
        if pts.shape[1] != self.dim:
            raise ValidationError(f"points must have {self.dim} coordinates")
        centered = (pts - self.mean).T
        y = solve_triangular(self.cholesky_factor, centered, lower=True)
        quad = np.einsum("ij,ij->j", y, y)
        log_det_half = float(np.sum(np.log(np.diag(self.cholesky_factor))))
        out = -0.5 * quad - 0.5 * self.dim * math.log(2.0 * math.pi) - log_det_half
        return float(out[0]) if single else out


def build_gaussian(params: ExperimentParams) -> GaussianLaw:
    """Gaussian with the with-replacement law's mean and covariance."""
    n = params.sample_size
    p = np.asarray(params.weights[: params.dim], dtype=float)
    mean = n * p
    covariance = n * (np.diag(p) - np.outer(p, p))
    return GaussianLaw.from_moments(mean, covariance)


def gaussian_log_density(law: GaussianLaw, x):
    """Module-level alias for :meth:`GaussianLaw.log_density`."""
    return law.log_density(x)


class JitteredLaw:
    """Density of a lattice law after adding uniform noise on the unit cube.

    The density at x equals the pmf at the nearest lattice point, so it is
    piecewise constant; points outside every support cube have density zero.
    """

    def __init__(self, params: ExperimentParams, which: str):
        self.params = params
        self.which = _canonical_law(which)

    @property
    def dim(self) -> int:
        return self.params.dim

    def log_density(self, x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        pts = np.atleast_2d(arr)
        centers = round_half_away(pts)
        out = _log_pmf_matrix(self.params, self.which, centers)
        return float(out[0]) if single else out


def _support_points(params: ExperimentParams, which: str, cap: int | None) -> np.ndarray:
    which = _canonical_law(which)
    if which == HYPERGEOMETRIC:
        return support_matrix(params, cap)
    return count_vector_matrix(params.sample_size, params.dim, cap)


def _log_pmf_matrix(params: ExperimentParams, which: str, points: np.ndarray) -> np.ndarray:
    which = _canonical_law(which)
    if which == HYPERGEOMETRIC:
        return hypergeometric_log_pmf_matrix(params, points)
    return multinomial_log_pmf_matrix(params.sample_size, params.weights, points)


@dataclass(frozen=True)
class TVResult:
    """A total-variation value with its computation method and error bar."""

    value: float
    method: str
    error_estimate: float


@dataclass(frozen=True)
class TVBoundParts:
    """The explicit ingredients of the jittered-vs-Gaussian TV upper bound.

    The pieces are reported separately and no assembled inequality is ever
    asserted: the remaining terms of the bound carry unspecified constants.
    """

    nu: tuple[int, ...]
    tail_sum: float
    n2_over_N: float
    gaussian_term_scale: float


class HellingerResult(NamedTuple):
    """Squared Hellinger distance plus the TV bound it implies."""

    h_squared: float
    tv_bound: float


class TailCheck(NamedTuple):
    """Exact marginal tail probability next to its large-deviation bound."""

    empirical: float
    bound: float


# ---------------------------------------------------------------------------
# quadrature rules

@lru_cache(maxsize=None)
def _tensor_rule(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre offsets inside the centered unit cube and their weights."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = nodes / 2.0
    weights = weights / 2.0
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*([weights] * dim), indexing="ij")
    wprod = np.ones(offsets.shape[0])
    for g in wgrids:
        wprod = wprod * g.ravel()
    return offsets, wprod


@lru_cache(maxsize=None)
def _probe_offsets(dim: int) -> np.ndarray:
    """Cube corners plus the center, used to detect sign changes."""
    corners = np.array(
        [[(b >> i & 1) - 0.5 for i in range(dim)] for b in range(1 << dim)]
    )
    return np.vstack([corners, np.zeros((1, dim))])


def _gaussian_cube_masses(
    law: GaussianLaw, centers: np.ndarray, halfwidth: float, order: int
) -> np.ndarray:
    """Integral of the Gaussian density over cubes of the given half-width."""
    offsets, weights = _tensor_rule(order, law.dim)
    pts = centers[:, None, :] + offsets[None, :, :] * (2.0 * halfwidth)
    dens = np.exp(law.log_density(pts.reshape(-1, law.dim))).reshape(len(centers), -1)
    return (dens @ weights) * (2.0 * halfwidth) ** law.dim


def _cell_integrals(
    law: GaussianLaw, const: float, center: np.ndarray, halfwidth: float, orders
) -> dict[int, tuple[float, float]]:
    """Per-order (integral of |const - density|, integral of density) on one cell."""
    out = {}
    for order in orders:
        offsets, weights = _tensor_rule(order, law.dim)
        pts = center[None, :] + offsets * (2.0 * halfwidth)
        dens = np.exp(law.log_density(pts))
        vol = (2.0 * halfwidth) ** law.dim
        out[order] = (
            float(np.abs(const - dens) @ weights) * vol,
            float(dens @ weights) * vol,
        )
    return out


def _cell_straddles(law: GaussianLaw, log_const: float, center: np.ndarray, halfwidth: float) -> bool:
    probes = center[None, :] + _probe_offsets(law.dim) * (2.0 * halfwidth)
    diff = law.log_density(probes) - log_const
    return bool(diff.max() >= 0.0) and bool(diff.min() <= 0.0)


def _split_interval_integrals(
    law: GaussianLaw, const: float, log_const: float, center: np.ndarray,
    halfwidth: float, orders,
) -> dict[int, tuple[float, float]]:
    """One-dimensional cell: cut exactly where the density crosses the constant.

    Each resulting piece is smooth, so plain Gauss-Legendre recovers its full
    order of accuracy; the crossings are pinned by bisection on the continuous
    log-density, which needs no assumptions beyond a sign change.
    """
    lo_edge = float(center[0]) - halfwidth
    hi_edge = float(center[0]) + halfwidth

    def gap(x: float) -> float:
        return float(law.log_density(np.array([[x]]))[0]) - log_const

    xs = np.linspace(lo_edge, hi_edge, 9)
    vals = [gap(x) for x in xs]
    cuts = [lo_edge, hi_edge]
    for (x0, v0), (x1, v1) in zip(zip(xs, vals), zip(xs[1:], vals[1:])):
        if v0 == 0.0 or v0 * v1 >= 0.0:
            continue
        lo, hi, vlo = x0, x1, v0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            vmid = gap(mid)
            if vlo * vmid <= 0.0:
                hi = mid
            else:
                lo, vlo = mid, vmid
        cuts.append(0.5 * (lo + hi))
    cuts.sort()
    out = {}
    for order in orders:
        offsets, weights = _tensor_rule(order, 1)
        acc_abs = 0.0
        acc_mass = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            width = b - a
            if width <= 0.0:
                continue
            pts = (0.5 * (a + b) + offsets[:, 0] * width)[:, None]
            dens = np.exp(law.log_density(pts))
            acc_abs += float(np.abs(const - dens) @ weights) * width
            acc_mass += float(dens @ weights) * width
        out[order] = (acc_abs, acc_mass)
    return out


def _kinked_cell_integrals(
    law: GaussianLaw,
    const: float,
    log_const: float,
    center: np.ndarray,
    halfwidth: float,
    depth: int,
    orders,
) -> dict[int, tuple[float, float]]:
    """Bisect a cell that straddles the constant until smooth or depth runs out."""
    if not _cell_straddles(law, log_const, center, halfwidth):
        return _cell_integrals(law, const, center, halfwidth, orders)
    if law.dim == 1:
        return _split_interval_integrals(law, const, log_const, center, halfwidth, orders)
    if depth == 0:
        return _cell_integrals(law, const, center, halfwidth, orders)
    half = halfwidth / 2.0
    totals = {order: (0.0, 0.0) for order in orders}
    for shift in _probe_offsets(law.dim)[: 1 << law.dim]:
        child = center + shift * (2.0 * halfwidth) / 2.0
        sub = _kinked_cell_integrals(law, const, log_const, child, half, depth - 1, orders)
        for order in orders:
            a, m = totals[order]
            da, dm = sub[order]
            totals[order] = (a + da, m + dm)
    return totals


# ---------------------------------------------------------------------------
# total variation computations

def tv_discrete(params: ExperimentParams, law_a: str, law_b: str, cap: int | None = None) -> TVResult:
    """Exact TV between the two discrete laws by full enumeration."""
    a = _canonical_law(law_a)
    b = _canonical_law(law_b)
    if MULTINOMIAL in (a, b):
        points = count_vector_matrix(params.sample_size, params.dim, cap)
    else:
        points = support_matrix(params, cap)
    pa = np.exp(_log_pmf_matrix(params, a, points))
    pb = np.exp(_log_pmf_matrix(params, b, points))
    value = 0.5 * math.fsum(np.abs(pa - pb).tolist())
    # Every term carries at most a few ulps; the sums themselves are exact.
    error = 1e-15 * len(points) + 1e-15
    return TVResult(value=value, method=METHOD_EXACT, error_estimate=error)


def tv_jittered_discrete_pair(
    params: ExperimentParams,
    law_a: str,
    law_b: str,
    quad_order: int = DEFAULT_QUAD_ORDER,
    cap: int | None = None,
) -> TVResult:
    """TV between two jittered discrete laws by per-cube quadrature.

    Both densities are constant on every unit cube, so this must reproduce
    the exact discrete TV; it exists as an independent consistency route.
    """
    _check_quad_args(params.dim, quad_order)
    a = _canonical_law(law_a)
    b = _canonical_law(law_b)
    if MULTINOMIAL in (a, b):
        points = count_vector_matrix(params.sample_size, params.dim, cap)
    else:
        points = support_matrix(params, cap)
    da = JitteredLaw(params, a)
    db = JitteredLaw(params, b)
    offsets, weights = _tensor_rule(quad_order, params.dim)
    pts = (points[:, None, :] + offsets[None, :, :]).reshape(-1, params.dim)
    fa = np.exp(da.log_density(pts)).reshape(len(points), -1)
    fb = np.exp(db.log_density(pts)).reshape(len(points), -1)
    per_cube = np.abs(fa - fb) @ weights
    value = 0.5 * math.fsum(per_cube.tolist())
    error = 1e-15 * len(points) + 1e-15
    return TVResult(value=value, method=METHOD_QUAD, error_estimate=error)


def _check_quad_args(dim: int, quad_order: int) -> None:
    if quad_order < 2:
        raise ValidationError("quad_order must be at least 2")
    if dim > MAX_QUAD_DIM:
        raise ValidationError(
            f"quadrature supports dimension <= {MAX_QUAD_DIM}; "
            "use the Monte Carlo path instead"
        )


def tv_jittered_vs_gaussian(
    params: ExperimentParams,
    discrete_law: str,
    law: GaussianLaw,
    quad_order: int = DEFAULT_QUAD_ORDER,
    cap: int | None = None,
) -> TVResult:
    """TV between a jittered discrete law and a Gaussian, cube by cube.

    value = 1/2 [ sum_k int_cube(k) |pmf(k) - density| + (1 - sum_k int_cube(k) density) ];
    the complement term accounts for Gaussian mass outside the support cubes,
    keeping the result exact up to quadrature error.  Cubes where the density
    crosses the cube's constant are bisected recursively before integration.
    """
    _check_quad_args(params.dim, quad_order)
    if law.dim != params.dim:
        raise ValidationError("Gaussian dimension does not match the experiment")
    points = _support_points(params, discrete_law, cap)
    logp = _log_pmf_matrix(params, _canonical_law(discrete_law), points)
    consts = np.exp(logp)
    order_hi = quad_order
    order_lo = max(2, quad_order // 2)
    orders = (order_hi, order_lo) if order_lo != order_hi else (order_hi,)
    m = len(points)
    dim = params.dim

    # Sign-change detection at cube corners and centers, vectorized.
    probes = _probe_offsets(dim)
    probe_pts = (points[:, None, :] + probes[None, :, :]).reshape(-1, dim)
    probe_log = law.log_density(probe_pts).reshape(m, -1)
    diff = probe_log - logp[:, None]
    straddle = (diff.max(axis=1) >= 0.0) & (diff.min(axis=1) <= 0.0)

    abs_parts = {}
    mass_parts = {}
    for order in orders:
        offsets, weights = _tensor_rule(order, dim)
        pts = (points[:, None, :] + offsets[None, :, :]).reshape(-1, dim)
        dens = np.exp(law.log_density(pts)).reshape(m, -1)
        abs_parts[order] = np.abs(consts[:, None] - dens) @ weights
        mass_parts[order] = dens @ weights

    centers = points.astype(float)
    for idx in np.nonzero(straddle)[0]:
        cell = _kinked_cell_integrals(
            law,
            float(consts[idx]),
            float(logp[idx]),
            centers[idx],
            0.5,
            MAX_BISECTION_DEPTH,
            orders,
        )
        for order in orders:
            abs_parts[order][idx], mass_parts[order][idx] = cell[order]

    values = {}
    for order in orders:
        total_abs = math.fsum(abs_parts[order].tolist())
        total_mass = math.fsum(mass_parts[order].tolist())
        values[order] = 0.5 * (total_abs + max(0.0, 1.0 - total_mass))
    value = min(max(values[order_hi], 0.0), 1.0)
    if len(orders) == 2:
        error = abs(values[order_hi] - values[order_lo]) + 1e-12 + 1e-16 * m
    else:
        error = 1e-12 + 1e-16 * m
    return TVResult(value=value, method=METHOD_QUAD, error_estimate=error)


def tv_monte_carlo(
    params: ExperimentParams,
    discrete_law: str,
    density,
    sample_count: int,
    seed: int | np.random.SeedSequence = 0,
) -> TVResult:
    """Monte Carlo estimate of TV(jittered discrete law, density).

    Uses TV = E_X[(1 - density(X)/jittered(X))^+] with X drawn from the
    jittered law; reports the sample mean and its standard error (a
    one-sigma band).  ``density`` is any object with a log_density method.
    """
    if sample_count < MIN_MC_SAMPLES:
        raise ValidationError(f"sample_count must be at least {MIN_MC_SAMPLES}")
    which = _canonical_law(discrete_law)
    dim = params.dim
    n_chunks = (sample_count + _MC_CHUNK - 1) // _MC_CHUNK
    children = split_seed(seed, n_chunks)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk_sums = []
    chunk_sq_sums = []
    for child in children:
        m = min(_MC_CHUNK, sample_count - done)
        done += m
        gen = make_generator(child)
        if which == HYPERGEOMETRIC:
            draws = sample_hypergeometric(params, gen, size=m)
        else:
            draws = sample_multinomial(params.sample_size, params.weights, gen, size=m)
        noise = gen.random((m, dim)) - 0.5
        noise[noise == -0.5] = 0.0  # keep the jitter inside the open cube
        x = draws + noise
        logp = _log_pmf_matrix(params, which, draws)
        logd = density.log_density(x)
        term = 1.0 - np.exp(logd - logp)
        np.clip(term, 0.0, None, out=term)
        chunk_sums.append(float(np.sum(term)))
        chunk_sq_sums.append(float(np.dot(term, term)))
    total = math.fsum(chunk_sums)
    total_sq = math.fsum(chunk_sq_sums)
    mean = total / sample_count
    if sample_count > 1:
        var = max(0.0, (total_sq - sample_count * mean * mean) / (sample_count - 1))
        stderr = math.sqrt(var / sample_count)
    else:
        stderr = float("inf")
    return TVResult(value=mean, method=METHOD_MC, error_estimate=stderr)


def hellinger_discrete(params: ExperimentParams, cap: int | None = None) -> HellingerResult:
    """Squared Hellinger distance between the two discrete laws.

    Also returns 2 * sqrt(H^2), a conservative upper bound on their TV
    distance (TV <= sqrt(H^2 (2 - H^2)) <= 2 H).
    """
    points = count_vector_matrix(params.sample_size, params.dim, cap)
    lp = hypergeometric_log_pmf_matrix(params, points)
    lq = multinomial_log_pmf_matrix(params.sample_size, params.weights, points)
    both = 0.5 * (lp + lq)
    both[np.isneginf(lp) | np.isneginf(lq)] = -np.inf
    overlap = math.fsum(np.exp(both).tolist())
    h_squared = max(0.0, 1.0 - overlap)
    return HellingerResult(h_squared=h_squared, tv_bound=math.sqrt(4.0 * h_squared))


def _tail_summand(params: ExperimentParams, coord: int) -> tuple[int, float]:
    N = params.population
    n = params.sample_size
    c = params.counts[coord]
    nu = (N - 1) // c  # integer form of ceil(1/p - 1)
    exp1 = float(Fraction(n * nu * c, N))
    exp2 = float(Fraction(n * (N - nu * c), N))
    log_term = -exp1 * math.log(nu) + exp2 * math.log((N - c) / (N - nu * c))
    return nu, math.exp(log_term)


def tv_bound_parts(params: ExperimentParams) -> TVBoundParts:
    """Explicit pieces of the jittered-vs-Gaussian TV upper bound.

    Valid in the regime where the sample is at most three quarters of the
    population.
    """
    N = params.population
    n = params.sample_size
    if 4 * n > 3 * N:
        raise RegimeError(
            f"sample_size {n} exceeds three quarters of population {N}"
        )
    nus = []
    summands = []
    for i in range(params.dim + 1):
        nu, term = _tail_summand(params, i)
        nus.append(nu)
        summands.append(term)
    scale = params.dim / math.sqrt(n) * math.sqrt(weight_ratio(params))
    return TVBoundParts(
        nu=tuple(nus),
        tail_sum=math.fsum(summands),
        n2_over_N=n * n / N,
        gaussian_term_scale=scale,
    )


def tail_probability_check(params: ExperimentParams, coord: int) -> TailCheck:
    """Exact marginal tail P(K_i > nu_i n p_i) next to its displayed bound.

    The marginal of one coordinate is a univariate version of the sampling
    law, so the tail is a short exact sum.  ``coord`` indexes the dim + 1
    categories, 0-based.
    """
    if not 0 <= coord <= params.dim:
        raise ValidationError(f"coord must lie in [0, {params.dim}]")
    N = params.population
    n = params.sample_size
    c = params.counts[coord]
    nu, bound = _tail_summand(params, coord)
    threshold = Fraction(nu * n * c, N)
    j_start = int(threshold) + 1  # strict inequality: smallest integer above
    j_end = min(c, n)
    if j_start > j_end:
        return TailCheck(empirical=0.0, bound=bound)
    js = np.arange(j_start, j_end + 1)
    logs = (
        log_binomial_array(c, js)
        + log_binomial_array(N - c, n - js)
        - log_binomial(N, n)
    )
    empirical = math.fsum(np.exp(logs).tolist())
    return TailCheck(empirical=empirical, bound=bound)
