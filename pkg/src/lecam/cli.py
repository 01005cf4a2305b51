"""Command-line front end.

Subcommands cover single-point evaluations (pmf, ratio, tv, bound-parts,
tail-check, dpi-check) and scans with slope summaries (expansion-scan,
lecam-scan).  Scans write CSV via --out and everything can emit JSON; both
formats carry identical values.  Exit codes: 0 success, 2 usage, 3
validation, 4 resource cap.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from typing import Sequence

from .distances import (
    DEFAULT_QUAD_ORDER,
    JitteredLaw,
    TVResult,
    build_gaussian,
    tail_probability_check,
    tv_bound_parts,
    tv_discrete,
    tv_jittered_discrete_pair,
    tv_jittered_vs_gaussian,
    tv_monte_carlo,
)
from .errors import LecamError, SupportCapError, ValidationError
from .expansion import expand, residual_scan
from .kernels import data_processing_check, deficiency_upper_bounds
from .lattice import ExperimentParams, validate_params
from .numerics import SlopeFit, fit_loglog_slope
from .pmf import hypergeometric_log_pmf, multinomial_log_pmf
from .records import ScanRecord, records_to_json, write_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_CAP = 4


class UsageError(Exception):
    """Malformed invocation detected after argparse (empty or short lists)."""


def _int_list(text: str) -> list[int]:
    try:
        items = [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return items


def _fmt(x: float) -> str:
    return format(x, ".15g")


def _json_value(x: float):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
    return x


def _print_json(doc: dict) -> None:
    print(json.dumps(doc, indent=2, allow_nan=False))


def _build_params(args, population: int | None = None) -> ExperimentParams:
    counts = args.Np
    N = population if population is not None else getattr(args, "N", None)
    if N is None:
        N = sum(counts)
    return validate_params(N, args.n, counts)


def _scaled_params(population: int, sample_size: int, pattern: Sequence[int]) -> ExperimentParams:
    """Scale an integer weight pattern to a given population, exactly."""
    total = sum(pattern)
    counts = []
    for w in pattern:
        c = Fraction(population * w, total)
        if c.denominator != 1:
            raise ValidationError(
                f"pattern {tuple(pattern)} does not scale to integer counts at N={population}"
            )
        counts.append(int(c))
    return validate_params(population, sample_size, counts)


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_pmf(args) -> int:
    params = _build_params(args)
    point = tuple(args.k)
    if args.dist == "hyper":
        logp = hypergeometric_log_pmf(params, point)
    else:
        logp = multinomial_log_pmf(params.sample_size, params.weights, point)
    prob = math.exp(logp) if logp > float("-inf") else 0.0
    if args.json:
        _print_json({"log_probability": _json_value(logp), "probability": prob})
    else:
        print(f"log_probability = {_fmt(logp)}")
        print(f"probability = {_fmt(prob)}")
    return EXIT_OK


def _cmd_ratio(args) -> int:
    params = _build_params(args)
    result = expand(params, tuple(args.k))
    fields = ("exact", "order1", "order2", "residual1", "residual2")
    if args.json:
        _print_json({name: getattr(result, name) for name in fields})
    else:
        for name in fields:
            print(f"{name} = {_fmt(getattr(result, name))}")
    return EXIT_OK


def _slope_line(name: str, fit: SlopeFit) -> str:
    return (
        f"slope({name}) = {_fmt(fit.slope)} "
        f"(intercept={_fmt(fit.intercept)}, r_squared={_fmt(fit.r_squared)}, "
        f"points={fit.points_used})"
    )


def _cmd_expansion_scan(args) -> int:
    populations = args.N
    if len(populations) < 4:
        raise UsageError("expansion-scan needs at least 4 population values in --N")
    family = [_scaled_params(N, args.n, args.Np) for N in populations]
    point = tuple(args.k)
    scan = residual_scan(
        family, lambda p: point, order=args.order, gamma=args.gamma, jobs=args.jobs
    )
    records = list(scan.records)
    if args.out:
        write_csv(records, args.out)
    fits = {}
    if scan.degenerate:
        summary = "degenerate: residuals identically 0"
    else:
        fits[f"abs_residual_order{args.order}"] = scan.fit
        summary = _slope_line(f"abs_residual_order{args.order}", scan.fit)
    if args.json:
        _print_json(
            json.loads(
                records_to_json(records, fits, extra={"degenerate": scan.degenerate})
            )
        )
    else:
        for r in records:
            print(f"N={r.population} {r.quantity} = {_fmt(r.value)}")
        print(summary)
    return EXIT_OK


_TV_PAIRS = (
    "hyper-multi",
    "hyper-hyper",
    "multi-multi",
    "jitterhyper-jittermulti",
    "jitterhyper-gauss",
    "jittermulti-gauss",
)


def _compute_tv(params: ExperimentParams, pair: str, method: str, args) -> TVResult:
    discrete = {"hyper-multi": ("hyper", "multi"), "hyper-hyper": ("hyper", "hyper"),
                "multi-multi": ("multi", "multi")}
    if pair in discrete:
        if method not in ("auto", "exact"):
            raise ValidationError(
                f"pair {pair} is computed exactly; jitter the laws for quad or mc"
            )
        return tv_discrete(params, *discrete[pair])
    if pair == "jitterhyper-jittermulti":
        if method in ("auto", "quad"):
            return tv_jittered_discrete_pair(params, "hyper", "multi", args.quad_order)
        if method == "mc":
            return tv_monte_carlo(
                params, "hyper", JitteredLaw(params, "multi"), args.samples, args.seed
            )
        raise ValidationError(f"method {method!r} not available for pair {pair}")
    which = "hyper" if pair == "jitterhyper-gauss" else "multi"
    law = build_gaussian(params)
    if method in ("auto", "quad"):
        return tv_jittered_vs_gaussian(params, which, law, args.quad_order)
    if method == "mc":
        return tv_monte_carlo(params, which, law, args.samples, args.seed)
    raise ValidationError(f"method {method!r} not available for pair {pair}")


def _cmd_tv(args) -> int:
    params = _build_params(args)
    result = _compute_tv(params, args.pair, args.method, args)
    if args.json:
        _print_json(
            {
                "tv": result.value,
                "method": result.method,
                "error_estimate": result.error_estimate,
            }
        )
    else:
        print(f"tv = {_fmt(result.value)}")
        print(f"method = {result.method}")
        print(f"error_estimate = {_fmt(result.error_estimate)}")
    return EXIT_OK


def _cmd_bound_parts(args) -> int:
    params = _build_params(args)
    parts = tv_bound_parts(params)
    if args.json:
        _print_json(
            {
                "nu": list(parts.nu),
                "tail_sum": parts.tail_sum,
                "n2_over_N": parts.n2_over_N,
                "gaussian_term_scale": parts.gaussian_term_scale,
            }
        )
    else:
        print(f"nu = {','.join(str(v) for v in parts.nu)}")
        print(f"tail_sum = {_fmt(parts.tail_sum)}")
        print(f"n2_over_N = {_fmt(parts.n2_over_N)}")
        print(f"gaussian_term_scale = {_fmt(parts.gaussian_term_scale)}")
    return EXIT_OK


def _cmd_tail_check(args) -> int:
    params = _build_params(args)
    coords = [args.coord] if args.coord is not None else list(range(params.dim + 1))
    rows = []
    for coord in coords:
        check = tail_probability_check(params, coord)
        nu = (params.population - 1) // params.counts[coord]
        rows.append(
            {
                "coord": coord,
                "nu": nu,
                "empirical": check.empirical,
                "bound": check.bound,
                "holds": check.empirical <= check.bound,
            }
        )
    if args.json:
        _print_json({"checks": rows})
    else:
        for row in rows:
            print(
                f"coord = {row['coord']}: nu = {row['nu']}, "
                f"empirical = {_fmt(row['empirical'])}, bound = {_fmt(row['bound'])}, "
                f"holds = {row['holds']}"
            )
    return EXIT_OK


_FLAGGED_METHOD = "flagged:outside-regime"


def _lecam_point(task: tuple) -> list[ScanRecord]:
    """One scan row bundle; top-level so process pools can pickle it."""
    (N, n, pattern, method, quad_order, samples, seed) = task
    params = _scaled_params(N, n, pattern)
    weights = params.weights
    records = []

    def record(quantity, value, error, method_name):
        records.append(
            ScanRecord(
                population=N,
                sample_size=n,
                dim=params.dim,
                weights=weights,
                quantity=quantity,
                value=value,
                error=error,
                method=method_name,
            )
        )

    gauss = build_gaussian(params)
    if method == "mc":
        tv_multi = tv_monte_carlo(params, "multi", gauss, samples, seed)
    else:
        tv_multi = tv_jittered_vs_gaussian(params, "multi", gauss, quad_order)
    in_regime = 4 * n <= 3 * N
    if in_regime:
        report = deficiency_upper_bounds(
            params,
            tv_method="mc" if method == "mc" else "quadrature",
            quad_order=quad_order,
            sample_count=samples,
            seed=seed,
        )
        record("delta_P_to_Q", report.delta_P_to_Q, report.error_estimate, report.method)
        record("delta_Q_to_P", report.delta_Q_to_P, report.error_estimate, report.method)
        record("le_cam_upper", report.le_cam_upper, report.error_estimate, report.method)
        record("budget", report.budget, 0.0, "closed-form")
    else:
        nan = float("nan")
        for name in ("delta_P_to_Q", "delta_Q_to_P", "le_cam_upper", "budget"):
            record(name, nan, nan, _FLAGGED_METHOD)
    record(
        "tv_jittered_multinomial_gauss",
        tv_multi.value,
        tv_multi.error_estimate,
        tv_multi.method,
    )
    return records


def _cmd_lecam_scan(args) -> int:
    ns = args.n
    if len(ns) == 0:
        raise UsageError("lecam-scan needs a non-empty --n list")
    if args.N is not None:
        if len(args.N) != len(ns):
            raise UsageError("--N list must match the --n list in length")
        populations = args.N
    else:
        populations = [n**3 for n in ns]
    tasks = [
        (N, n, tuple(args.Np), args.method, args.quad_order, args.samples, args.seed + i)
        for i, (N, n) in enumerate(zip(populations, ns))
    ]
    results = _map_ordered(_lecam_point, tasks, args.jobs)
    records = [r for bundle in results for r in bundle]
    if args.out:
        write_csv(records, args.out)
    fits: dict[str, SlopeFit] = {}
    lines = []
    for quantity in ("le_cam_upper", "tv_jittered_multinomial_gauss"):
        pts = [
            (r.sample_size, r.value)
            for r in records
            if r.quantity == quantity and r.method != _FLAGGED_METHOD and r.value > 0
        ]
        if len(pts) >= 4:
            fit = fit_loglog_slope([x for x, _ in pts], [y for _, y in pts])
            fits[quantity] = fit
            lines.append(_slope_line(quantity, fit))
        else:
            lines.append(f"slope({quantity}) skipped: fewer than 4 usable points")
    if args.json:
        _print_json(json.loads(records_to_json(records, fits)))
    else:
        for r in records:
            print(
                f"n={r.sample_size} N={r.population} {r.quantity} = {_fmt(r.value)}"
                + (f"  [{r.method}]" if r.method == _FLAGGED_METHOD else "")
            )
        for line in lines:
            print(line)
    return EXIT_OK


def _cmd_dpi_check(args) -> int:
    params = _build_params(args)
    result = data_processing_check(params, quad_order=args.quad_order)
    holds = result.slack >= -result.combined_error
    if args.json:
        _print_json(
            {
                "tv_before": result.tv_before,
                "tv_after": result.tv_after,
                "slack": result.slack,
                "combined_error": result.combined_error,
                "holds": holds,
            }
        )
    else:
        print(f"tv_before = {_fmt(result.tv_before)}")
        print(f"tv_after = {_fmt(result.tv_after)}")
        print(f"slack = {_fmt(result.slack)}")
        print(f"combined_error = {_fmt(result.combined_error)}")
        print(f"holds = {holds}")
    return EXIT_OK


def _map_ordered(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lecam",
        description=(
            "Distances between finite-population sampling experiments and "
            "their Gaussian limits"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, n_list=False, with_N=True, N_list=False):
        if with_N:
            if N_list:
                sp.add_argument("--N", type=_int_list, default=None,
                                help="population size(s), comma separated")
            else:
                sp.add_argument("--N", type=int, default=None, help="population size")
        if n_list:
            sp.add_argument("--n", type=_int_list, required=True,
                            help="sample size(s), comma separated")
        else:
            sp.add_argument("--n", type=int, required=True, help="sample size")
        sp.add_argument("--Np", type=_int_list, required=True,
                        help="integer category weights, comma separated")
        sp.add_argument("--json", action="store_true", help="emit JSON instead of text")

    p = sub.add_parser("pmf", help="evaluate one probability mass")
    add_common(p)
    p.add_argument("--dist", choices=("hyper", "multi"), required=True)
    p.add_argument("--k", type=_int_list, required=True, help="lattice point")
    p.set_defaults(handler=_cmd_pmf)

    p = sub.add_parser("ratio", help="exact log-ratio and its expansions at one point")
    add_common(p)
    p.add_argument("--k", type=_int_list, required=True, help="lattice point")
    p.set_defaults(handler=_cmd_ratio)

    p = sub.add_parser("expansion-scan", help="residual decay rates across populations")
    add_common(p, N_list=True)
    p.add_argument("--k", type=_int_list, required=True, help="lattice point, held fixed")
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--gamma", type=float, default=0.75, help="truncation parameter")
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(handler=_cmd_expansion_scan)

    p = sub.add_parser("tv", help="total variation between a pair of laws")
    add_common(p)
    p.add_argument("--pair", choices=_TV_PAIRS, required=True)
    p.add_argument("--method", choices=("auto", "exact", "quad", "mc"), default="auto")
    p.add_argument("--quad-order", dest="quad_order", type=int, default=DEFAULT_QUAD_ORDER)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_tv)

    p = sub.add_parser("bound-parts", help="explicit pieces of the TV upper bound")
    add_common(p)
    p.set_defaults(handler=_cmd_bound_parts)

    p = sub.add_parser("tail-check", help="marginal tail probability vs its bound")
    add_common(p)
    p.add_argument("--coord", type=int, default=None,
                   help="category index (0-based); default checks all")
    p.set_defaults(handler=_cmd_tail_check)

    p = sub.add_parser("lecam-scan", help="deficiency bounds along a growing family")
    add_common(p, n_list=True, N_list=True)
    p.add_argument("--method", choices=("quad", "mc"), default="quad")
    p.add_argument("--quad-order", dest="quad_order", type=int, default=DEFAULT_QUAD_ORDER)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(handler=_cmd_lecam_scan)

    p = sub.add_parser("dpi-check", help="data-processing inequality after rounding")
    add_common(p)
    p.add_argument("--quad-order", dest="quad_order", type=int, default=DEFAULT_QUAD_ORDER)
    p.set_defaults(handler=_cmd_dpi_check)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return EXIT_OK
        return code if isinstance(code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SupportCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LecamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
