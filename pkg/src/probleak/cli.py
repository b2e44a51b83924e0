"""Command-line audit front end.

Subcommands mirror the library: ingest a CSV, fit the flat-prior regression,
report leakage against declared evidence, check strict falsification, run
calibration diagnostics on a held-out split, generate simulated datasets, and
emit the plot data behind the leakage figure (predictive density curves with
the support bound marked).

Exit codes: 0 success; 1 usage error (message on stderr); 2 data or model
error (message on stderr, or a machine-readable {"error": ...} document on
stdout when --json-errors is set).
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    ForecastCase,
    calibration_report,
    crps,
    ks_uniform,
    pit,
    probability_calibration,
)
from .exceptions import DataError, ModelError
from .falsification import FalsificationVerdict, Observation, is_falsified
from .leakage import Evidence, leakage, leakage_profile, parse_support
from .regression import Dataset, ModelSpec, fit_model, load_dataset, predictive_at
from .simulation import (
    DEFAULT_TRUNCATED_CONFIG,
    CallCenterConfig,
    SimConfig,
    gen_callcenter_like,
    gen_truncated_regression,
)

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; the contract reserves 2
    # for data/model errors, so usage problems are rerouted to status 1
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage().rstrip()}")


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def _json_default(obj):
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _emit_json(doc: dict, args) -> None:
    text = json.dumps(doc, indent=2, default=_json_default)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _emit_text(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_data(path: str) -> Dataset:
    try:
        return load_dataset(path)
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from None


def _load_and_spec(args):
    data = _load_data(args.data)
    covariates = tuple(c.strip() for c in args.covariates.split(",") if c.strip())
    spec = ModelSpec(args.response, covariates, intercept=not args.no_intercept)
    return data, spec


def _load_and_fit(args):
    data, spec = _load_and_spec(args)
    return data, spec, fit_model(data, spec)


def _parse_support_arg(text: str) -> Evidence:
    try:
        return parse_support(text)
    except ValueError as err:
        raise _UsageError(f"probleak: error: {err}") from None


def _parse_at(text: str):
    """--at accepts the keywords medians/minima or a JSON covariate point."""
    if text in ("medians", "minima"):
        return text
    try:
        point = json.loads(text)
    except json.JSONDecodeError:
        raise _UsageError(
            f"probleak: error: --at must be medians, minima, or a JSON object, got {text!r}"
        ) from None
    if not isinstance(point, dict):
        raise _UsageError("probleak: error: a JSON --at point must be an object")
    return point


def _training_points(data: Dataset, spec: ModelSpec, how: str) -> list[dict]:
    """Covariate points at training medians or minima.

    A categorical covariate has no median or minimum, so it expands to one
    point per observed level (levels in sorted order) and the numeric
    summaries are shared across the expansion.
    """
    base = {}
    cat_axes = []
    for name in spec.covariates:
        col = data.column(name)
        if data.is_numeric(name):
            base[name] = float(np.median(col) if how == "medians" else col.min())
        else:
            cat_axes.append((name, sorted(np.unique(col).tolist())))
    points = []
    for combo in itertools.product(*(levels for _, levels in cat_axes)):
        point = dict(base)
        for (name, _), level in zip(cat_axes, combo):
            point[name] = level
        points.append(point)
    return points


def _row_point(data: Dataset, spec: ModelSpec, i: int) -> dict:
    point = {}
    for name in spec.covariates:
        col = data.column(name)
        point[name] = float(col[i]) if data.is_numeric(name) else str(col[i])
    return point


def _fit_summary(spec: ModelSpec, result) -> dict:
    return {
        "response": spec.response,
        "covariates": list(spec.covariates),
        "intercept": spec.intercept,
        "n": result.n,
        "p": result.p,
        "df": result.df,
        "coefficients": result.coefficients(),
        "s2": result.s2,
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_fit(args) -> int:
    data, spec, result = _load_and_fit(args)
    doc = {"version": __version__, **_fit_summary(spec, result)}
    _emit_json(doc, args)
    return 0


def _cmd_leak(args) -> int:
    data, spec, result = _load_and_fit(args)
    evidence = _parse_support_arg(args.support)
    at = _parse_at(args.at)
    if isinstance(at, str):
        points, label = _training_points(data, spec, at), at
    else:
        points, label = [at], "point"
    reports = [leakage(predictive_at(result, pt), evidence, x_star=pt) for pt in points]
    doc = {
        "version": __version__,
        "at": label,
        "support": args.support,
        "reports": [r.to_json() for r in reports],
    }
    _emit_json(doc, args)
    return 0


def _parse_grid(text: str):
    try:
        name, span = text.split("=", 1)
        lo_s, hi_s, count_s = span.split(":")
        lo, hi, count = float(lo_s), float(hi_s), int(count_s)
    except ValueError:
        raise _UsageError(
            f'probleak: error: --grid must look like "x=0:2:21", got {text!r}'
        ) from None
    if count < 2 or not lo < hi:
        raise _UsageError("probleak: error: grid needs lo < hi and at least 2 points")
    return name.strip(), np.linspace(lo, hi, count)


def _cmd_leak_profile(args) -> int:
    data, spec, result = _load_and_fit(args)
    evidence = _parse_support_arg(args.support)
    name, grid = _parse_grid(args.grid)
    if name not in spec.covariates:
        raise _UsageError(f"probleak: error: grid covariate {name!r} is not in --covariates")
    if not data.is_numeric(name):
        raise _UsageError(f"probleak: error: grid covariate {name!r} must be numeric")
    fixed = {}
    if args.at is not None:
        at = _parse_at(args.at)
        if not isinstance(at, dict):
            raise _UsageError("probleak: error: leak-profile --at takes a JSON object")
        fixed = at
    base = {}
    for other in spec.covariates:
        if other == name:
            continue
        if other in fixed:
            base[other] = fixed[other]
        elif data.is_numeric(other):
            base[other] = float(np.median(data.column(other)))
        else:
            raise _UsageError(
                f"probleak: error: categorical covariate {other!r} must be pinned "
                f'via --at, e.g. --at \'{{"{other}": "<level>"}}\''
            )
    points = [{**base, name: float(v)} for v in grid]
    reports = leakage_profile(result, evidence, points)
    lines = [f"{name},leakage"]
    for v, rep in zip(grid, reports):
        lines.append(f"{float(v)!r},{float(rep.leakage)!r}")
    _emit_text("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_falsify(args) -> int:
    data, spec, result = _load_and_fit(args)
    at = _parse_at(args.at)
    points = _training_points(data, spec, at) if isinstance(at, str) else [at]
    if len(points) != 1:
        raise _UsageError(
            "probleak: error: falsify needs a single covariate point; pin "
            "categorical levels via a JSON --at"
        )
    mode = {"point": "point_event", "interval": "interval_event"}[args.mode]
    if mode == "interval_event" and args.resolution is None:
        raise _UsageError("probleak: error: --mode interval requires --resolution")
    dist = predictive_at(result, points[0])
    verdict = is_falsified(dist, [Observation(args.value, args.resolution)], mode=mode)
    doc = {"version": __version__, **verdict.to_json()}
    _emit_json(doc, args)
    return 0


def _subset(data: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset({name: data.column(name)[idx] for name in data.names})


def _cmd_calibrate(args) -> int:
    data, spec = _load_and_spec(args)
    frac = args.holdout
    if not 0.0 < frac < 1.0:
        raise _UsageError("probleak: error: --holdout must be a fraction in (0, 1)")
    n_hold = int(round(frac * data.n))
    if n_hold < 1 or data.n - n_hold < 2:
        raise DataError(
            f"holdout fraction {frac} leaves an unusable split of {data.n} rows"
        )
    perm = np.random.default_rng(args.seed).permutation(data.n)
    hold = _subset(data, np.sort(perm[:n_hold]))
    train = _subset(data, np.sort(perm[n_hold:]))
    result = fit_model(train, spec)
    y_hold = hold.column(spec.response)
    cases = [
        ForecastCase(predictive_at(result, _row_point(hold, spec, i)), float(y_hold[i]))
        for i in range(hold.n)
    ]
    report = calibration_report(cases, seed=args.seed)
    doc = {
        "version": __version__,
        "holdout_fraction": frac,
        "n_train": train.n,
        "n_holdout": hold.n,
        **report.to_json(),
    }
    _emit_json(doc, args)
    if args.curves:
        for which in ("probability", "exceedance", "marginal"):
            Path(f"{args.curves}_{which}.csv").write_text(report.curve_csv(which))
    return 0


def _sim_config(doc: dict) -> SimConfig:
    known = {"n", "coefficients", "noise_sd", "covariate_ranges", "support_lower", "seed"}
    unknown = set(doc) - known
    if unknown:
        raise DataError(f"unknown simulate config keys: {sorted(unknown)}")
    base = DEFAULT_TRUNCATED_CONFIG
    support_lower = doc.get("support_lower", base.support_lower)
    if support_lower is None:
        support_lower = -math.inf
    try:
        return SimConfig(
            n=int(doc.get("n", base.n)),
            coefficients=tuple(doc.get("coefficients", base.coefficients)),
            noise_sd=float(doc.get("noise_sd", base.noise_sd)),
            covariate_ranges=tuple(
                tuple(r) for r in doc.get("covariate_ranges", base.covariate_ranges)
            ),
            support_lower=float(support_lower),
            seed=int(doc.get("seed", base.seed)),
        )
    except (TypeError, ValueError) as err:
        raise DataError(f"bad simulate config: {err}") from None


def _cc_config(doc: dict) -> CallCenterConfig:
    known = {"per_location_n", "calls_range", "absentee_range", "y_floor", "seed"}
    unknown = set(doc) - known
    if unknown:
        raise DataError(f"unknown simulate config keys: {sorted(unknown)}")
    base = CallCenterConfig()
    try:
        return CallCenterConfig(
            per_location_n=int(doc.get("per_location_n", base.per_location_n)),
            calls_range=tuple(doc.get("calls_range", base.calls_range)),
            absentee_range=tuple(doc.get("absentee_range", base.absentee_range)),
            y_floor=float(doc.get("y_floor", base.y_floor)),
            seed=int(doc.get("seed", base.seed)),
        )
    except (TypeError, ValueError) as err:
        raise DataError(f"bad simulate config: {err}") from None


def _cmd_simulate(args) -> int:
    doc: dict = {}
    if args.config:
        try:
            with open(args.config) as handle:
                doc = json.load(handle)
        except OSError as err:
            raise DataError(f"cannot read {args.config}: {err}") from None
        except json.JSONDecodeError as err:
            raise DataError(f"bad JSON in {args.config}: {err}") from None
        if not isinstance(doc, dict):
            raise DataError(f"simulate config must be a JSON object, got {type(doc).__name__}")
    if args.seed is not None:
        doc = {**doc, "seed": args.seed}
    if args.kind == "truncated":
        dataset = gen_truncated_regression(_sim_config(doc))
    else:
        dataset = gen_callcenter_like(_cc_config(doc))
    if args.out:
        dataset.to_csv(args.out)
    else:
        dataset.to_csv(sys.stdout)
    return 0


def _finite_bounds(evidence: Evidence) -> list[float]:
    if evidence.kind == "continuous_support":
        return [b for iv in evidence.intervals for b in iv if math.isfinite(b)]
    if evidence.values is not None:
        return [min(evidence.values), max(evidence.values)]
    lo, hi, _ = evidence.lattice
    return [b for b in (lo, hi) if math.isfinite(b)]


def _density_curves(dists: list, evidence: Evidence, grid_points: int) -> str:
    """CSV text: y, one density column per distribution, and a marker column
    flagging the rows pinned at the evidence's finite support bounds."""
    q = 5e-5
    lo = min(d.quantile(q) for _, d in dists)
    hi = max(d.quantile(1.0 - q) for _, d in dists)
    grid = np.linspace(lo, hi, grid_points)
    bounds = _finite_bounds(evidence)
    if bounds:
        grid = np.unique(np.concatenate([grid, np.asarray(bounds, dtype=float)]))
    bound_set = set(float(b) for b in bounds)
    columns = [d.density(grid) for _, d in dists]
    header = "y," + ",".join(f"density_{label}" for label, _ in dists) + ",marker"
    lines = [header]
    for i, y in enumerate(grid):
        marker = "support_bound" if float(y) in bound_set else ""
        cells = [repr(float(y))] + [repr(float(col[i])) for col in columns] + [marker]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _cmd_report(args) -> int:
    data, spec, result = _load_and_fit(args)
    evidence = _parse_support_arg(args.support)
    null_fit = fit_model(data, ModelSpec(spec.response, ()))
    null_dist = predictive_at(null_fit, {})

    leak_section = {"null_x": leakage(null_dist, evidence).to_json()}
    med_points = _training_points(data, spec, "medians")
    for key, points in (
        ("at_medians", med_points),
        ("at_minima", _training_points(data, spec, "minima")),
    ):
        leak_section[key] = [
            leakage(predictive_at(result, pt), evidence, x_star=pt).to_json()
            for pt in points
        ]
    if args.at is not None:
        at = _parse_at(args.at)
        if not isinstance(at, dict):
            raise _UsageError("probleak: error: report --at takes a JSON object")
        leak_section["at_point"] = [
            leakage(predictive_at(result, at), evidence, x_star=at).to_json()
        ]

    # strict falsification of the fitted model against its own training rows:
    # exact observations falsify any continuous predictive, so pass
    # --resolution to ask the finite-precision (interval) question instead
    mode = "interval_event" if args.resolution is not None else "point_event"
    y_train = data.column(spec.response)
    verdict = FalsificationVerdict(falsified=False, mode=mode)
    for i in range(data.n):
        obs = Observation(float(y_train[i]), args.resolution)
        v = is_falsified(predictive_at(result, _row_point(data, spec, i)), [obs], mode=mode)
        if v.falsified:
            verdict = v
            break

    cases = [
        ForecastCase(predictive_at(result, _row_point(data, spec, i)), float(y_train[i]))
        for i in range(data.n)
    ]
    pits = pit(cases, args.seed)
    prob = probability_calibration(pits, np.linspace(0.05, 0.95, 19))
    calibration = {
        "seed": args.seed,
        "n_cases": len(cases),
        "ks_stat": ks_uniform(pits),
        "max_probability_deviation": prob.max_deviation,
        "mean_crps": float(np.mean([crps(c.predictive, c.observed) for c in cases])),
    }

    dists = [("null", null_dist)]
    for pt in med_points:
        levels = [str(pt[name]) for name in spec.covariates if not data.is_numeric(name)]
        dists.append(("_".join(levels) if levels else "model", predictive_at(result, pt)))
    Path(args.out_curves).write_text(_density_curves(dists, evidence, args.grid_points))

    doc = {
        "version": __version__,
        "model": _fit_summary(spec, result),
        "support": args.support,
        "evidence": evidence.to_json(),
        "leakage": leak_section,
        "falsification": verdict.to_json(),
        "calibration": calibration,
        "curves_file": args.out_curves,
    }
    _emit_json(doc, args)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p) -> None:
    p.add_argument("--out", help="write the main output to this file instead of stdout")
    p.add_argument(
        "--json-errors",
        action="store_true",
        help='report data/model errors as {"error": ...} JSON on stdout',
    )


def _add_model_args(p) -> None:
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--response", required=True, help="response column name")
    p.add_argument(
        "--covariates",
        default="",
        help="comma-separated covariate columns (empty for the intercept-only model)",
    )
    p.add_argument(
        "--no-intercept", action="store_true", help="drop the intercept column"
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="probleak", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"probleak {__version__}"
    )
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("fit", help="fit the regression and print a summary")
    _add_model_args(p)
    _add_common(p)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("leak", help="probability leakage at covariate points")
    _add_model_args(p)
    p.add_argument("--support", required=True, help='evidence, e.g. "[0,inf)"')
    p.add_argument(
        "--at",
        default="medians",
        help="medians, minima, or a JSON covariate point (categorical covariates "
        "expand medians/minima to one report per level)",
    )
    _add_common(p)
    p.set_defaults(handler=_cmd_leak)

    p = sub.add_parser("leak-profile", help="leakage along a covariate grid, as CSV")
    _add_model_args(p)
    p.add_argument("--support", required=True, help='evidence, e.g. "[0,inf)"')
    p.add_argument("--grid", required=True, help='grid spec "name=lo:hi:count"')
    p.add_argument(
        "--at", help="JSON object pinning the non-grid covariates (numeric default: medians)"
    )
    _add_common(p)
    p.set_defaults(handler=_cmd_leak_profile)

    p = sub.add_parser("falsify", help="strict falsification verdict for one observation")
    _add_model_args(p)
    p.add_argument("--value", type=float, required=True, help="observed value")
    p.add_argument(
        "--mode",
        choices=("point", "interval"),
        default="point",
        help="point: exact observation; interval: value +- resolution/2",
    )
    p.add_argument("--resolution", type=float, help="measurement resolution (interval mode)")
    p.add_argument("--at", default="medians", help="covariate point (medians or JSON)")
    _add_common(p)
    p.set_defaults(handler=_cmd_falsify)

    p = sub.add_parser("calibrate", help="calibration diagnostics on a held-out split")
    _add_model_args(p)
    p.add_argument(
        "--holdout", type=float, required=True, help="held-out fraction in (0, 1)"
    )
    p.add_argument("--seed", type=int, default=0, help="split and PIT seed (default 0)")
    p.add_argument(
        "--curves", help="prefix: also write <prefix>_{probability,exceedance,marginal}.csv"
    )
    _add_common(p)
    p.set_defaults(handler=_cmd_calibrate)

    p = sub.add_parser("simulate", help="generate a dataset from a known truth, as CSV")
    p.add_argument("kind", choices=("truncated", "callcenter"))
    p.add_argument("--config", help="JSON config file (defaults are the shipped configs)")
    p.add_argument("--seed", type=int, help="override the config seed")
    _add_common(p)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser(
        "report", help="full audit document plus predictive density curve CSV"
    )
    _add_model_args(p)
    p.add_argument("--support", required=True, help='evidence, e.g. "[0,inf)"')
    p.add_argument(
        "--out-curves", required=True, help="write density curves CSV to this file"
    )
    p.add_argument(
        "--grid-points", type=int, default=2001, help="curve grid size (default 2001)"
    )
    p.add_argument("--at", help="extra JSON covariate point to audit")
    p.add_argument(
        "--resolution",
        type=float,
        help="observation resolution: falsification uses interval events",
    )
    p.add_argument("--seed", type=int, default=0, help="PIT randomization seed (default 0)")
    _add_common(p)
    p.set_defaults(handler=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (None, 0) else int(exc.code)
    try:
        return args.handler(args)
    except _UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except (DataError, ModelError) as err:
        if getattr(args, "json_errors", False):
            print(json.dumps({"error": str(err)}))
        else:
            print(f"probleak: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
