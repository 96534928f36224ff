"""Command-line front end: ``dmsing <scan|measure|decompose|nonmarkov|classify|reproduce>``.

Exit codes: 0 success (including "no decomposition" and "not CP" verdicts),
1 usage or input error, 2 numerical failure.
"""
import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from dmsing import __version__
from dmsing.bloch import choi_from_affine, is_completely_positive, is_positive_map
from dmsing.divisibility import (
    RANK_TOL,
    TIME_TOL,
    find_singular_points,
    scan_grid,
    solve_decomposition,
)
from dmsing.errors import (
    ConfigError,
    DimensionError,
    DomainError,
    DmsingError,
    NotAStateError,
    NumericalFailure,
    PoleError,
    SchemaError,
)
from dmsing.measures import MeasureConfig, non_markovianity, singularity_measure
from dmsing.models import (
    DephasingParams,
    JCParams,
    dephasing_family,
    family_from_kraus,
    jc_family,
    jc_singular_time,
    load_tabulated_family,
    semigroup_family,
)

log = logging.getLogger("dmsing")

DEFAULT_SEED = 42
USAGE_ERRORS = (ConfigError, DimensionError, DomainError, SchemaError, OSError, ValueError)
NUMERIC_ERRORS = (NumericalFailure, PoleError, NotAStateError, ArithmeticError)

MODEL_PARAMS = {
    "dephasing": {"A": 1.0, "N": 4},
    "jc": {"gamma0": 5.0, "lambda": 1.0},
    "semigroup": {"rate": 1.0},
}


class UsageError(DmsingError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_params(items):
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            raise UsageError(f"--param {key}: {value!r} is not a number") from None
        if not isinstance(params[key], (int, float)) or isinstance(params[key], bool):
            raise UsageError(f"--param {key}: {value!r} is not a number")
    return params


def build_family(model, params):
    """Resolve a ``--model`` spec and its parameters to (family, params)."""
    if model.startswith("file:"):
        if params:
            raise UsageError("file models take no --param")
        return load_tabulated_family(model[5:]), {}
    if model.startswith("kraus:"):
        if params:
            raise UsageError("kraus models take no --param")
        return family_from_kraus(model[6:]), {}
    if model not in MODEL_PARAMS:
        raise UsageError(f"unknown model {model!r}; expected dephasing, jc, semigroup, file:PATH or kraus:PATH")
    unknown = set(params) - set(MODEL_PARAMS[model])
    if unknown:
        raise UsageError(f"unknown parameter(s) for {model}: {', '.join(sorted(unknown))}")
    full = {**MODEL_PARAMS[model], **params}
    if model == "dephasing":
        if full["N"] != int(full["N"]):
            raise UsageError("dephasing parameter N must be an integer")
        full["N"] = int(full["N"])
        return dephasing_family(DephasingParams(A=full["A"], N=full["N"])), full
    if model == "jc":
        return jc_family(JCParams(gamma0=full["gamma0"], lam=full["lambda"])), full
    return semigroup_family(full["rate"]), full


def _dump(obj, out=None):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------


def cmd_scan(args):
    family, params = build_family(args.model, _parse_params(args.param))
    scan = scan_grid(family, args.t_max, args.grid_points, args.rank_tol)
    points = find_singular_points(family, args.t_max, args.grid_points, args.rank_tol,
                                  args.time_tol, scan=scan)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "sigma_min", "det", "rank"])
        for row in zip(scan.t, scan.sigma_min, scan.det, scan.rank):
            writer.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), int(row[3])])
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return 0

    entries = [dict(p.to_dict(), S=None) for p in points]
    n_m = None
    if args.measure:
        cfg = MeasureConfig(t_max=args.t_max, outer_grid=args.outer_grid)
        n_m = 0.0
        for entry, p in zip(entries, points):
            if p.confirmed and p.t_c < args.t_max:
                entry["S"] = singularity_measure(family, p.t_c, cfg).S
                n_m += entry["S"]
    report = {
        "model": args.model,
        "params": params,
        "t_max": args.t_max,
        "grid_points": args.grid_points,
        "rank_tol": args.rank_tol,
        "seed": args.seed,
        "singular_points": entries,
        "N_M": n_m,
        "version": __version__,
    }
    _dump(report, args.out)
    return 0


def cmd_measure(args):
    family, params = build_family(args.model, _parse_params(args.param))
    if not args.tc > 0:
        raise UsageError("--tc must be positive")
    cfg = MeasureConfig(t_max=args.t_max, outer_grid=args.outer_grid, refine_tol=args.refine_tol)
    log.info("restart trajectory semantics: environment reset at t_c")
    result = singularity_measure(family, args.tc, cfg)
    _dump(dict(model=args.model, params=params, **result.to_dict()))
    return 0


def _choi_report(res):
    choi = choi_from_affine(res.S, res.r)
    eig = np.linalg.eigvalsh(choi)
    return {
        "choi_eigenvalues": [float(x) for x in eig],
        "completely_positive": is_completely_positive(choi),
    }


def _check_interval(family, t1, t2):
    if not (0 < t1 < t2):
        raise UsageError("need 0 < t1 < t2")
    family(t1)
    family(t2)


def cmd_decompose(args):
    family, params = build_family(args.model, _parse_params(args.param))
    _check_interval(family, args.t1, args.t2)
    res = solve_decomposition(family(args.t1), family(args.t2), args.rank_tol)
    out = {"model": args.model, "params": params, "t1": args.t1, "t2": args.t2, **res.to_dict()}
    if args.check_cp:
        if family.d != 2:
            raise UsageError("--check-cp is available for qubit families only")
        if res.exists:
            out.update(_choi_report(res))
        else:
            out.update({"choi_eigenvalues": None, "completely_positive": None})
    _dump(out)
    return 0


def classify(family, t1, t2, rank_tol=RANK_TOL, n_samples=2000, seed=DEFAULT_SEED):
    """Divisibility verdict for the interval (t1, t2) of a qubit family."""
    res = solve_decomposition(family(t1), family(t2), rank_tol)
    if not res.exists:
        return "no-decomposition", res
    if is_completely_positive(choi_from_affine(res.S, res.r)):
        return "CP-divisible", res
    if is_positive_map(res.S, res.r, n_samples=n_samples, seed=seed):
        return "positive-only", res
    return "not-positive", res


def cmd_classify(args):
    family, _ = build_family(args.model, _parse_params(args.param))
    if family.d != 2:
        raise UsageError("classify is available for qubit families only")
    _check_interval(family, args.t1, args.t2)
    verdict, _ = classify(family, args.t1, args.t2, args.rank_tol, args.samples, args.seed)
    print(verdict)
    return 0


def cmd_nonmarkov(args):
    family, params = build_family(args.model, _parse_params(args.param))
    total, breakdown = non_markovianity(family, args.horizon, args.grid_points, args.rank_tol,
                                        args.outer_grid)
    _dump({
        "model": args.model,
        "params": params,
        "horizon": args.horizon,
        "N_M": total,
        "breakdown": [r.to_dict() for r in breakdown],
    })
    return 0


# -- reproduction harness ---------------------------------------------------------


def _row(label, numeric, expected, tol):
    diff = abs(numeric - expected)
    return {"quantity": label, "numeric": numeric, "closed_form": expected,
            "abs_diff": diff, "tol": tol, "pass": bool(diff <= tol)}


def reproduce_dephasing():
    p = DephasingParams(A=1.0, N=4)
    family = dephasing_family(p)
    horizon = 10.0
    points = find_singular_points(family, horizon)
    exact = [family.closed_form_singular_points(n) for n in range(3)]
    rows = [_row("count(t_c)", len(points), 3, 0)]
    for n, (pt, tc) in enumerate(zip(points, exact)):
        rows.append(_row(f"t_c[{n}]", pt.t_c, tc, 1e-6))
    cfg = MeasureConfig(t_max=horizon)
    for n, pt in enumerate(points):
        rows.append(_row(f"S(t_c[{n}])", singularity_measure(family, pt.t_c, cfg).S, 0.5, 1e-3))
    total, _ = non_markovianity(family, horizon)
    rows.append(_row("N_M", total, 1.5, 5e-3))
    return rows


def jc_closed_form_measure(p, n):
    """S(t_c^(n)) from the two-branch closed form."""
    x = math.exp(-2 * (n + 1) * math.pi * p.lam / p.d0)
    return 0.5 * math.sqrt(x / (1 - x)) if x < 0.5 else x


def reproduce_jc():
    rows = []
    p = JCParams(gamma0=5.0, lam=1.0)
    family = jc_family(p)
    points = find_singular_points(family, 3.0)
    rows.append(_row("gamma0=5 count(t_c<3)", len(points), 1, 0))
    if points:
        rows.append(_row("gamma0=5 t_c[0]", points[0].t_c, jc_singular_time(p, 0), 1e-6))
    for n in range(2):
        res = singularity_measure(family, jc_singular_time(p, n))
        rows.append(_row(f"gamma0=5 S(t_c[{n}])", res.S, jc_closed_form_measure(p, n), 1e-3))
        rows.append(_row(f"gamma0=5 argmax_T[{n}]", res.argmax_T, 2 * (n + 1) * math.pi / p.d0, 1e-3))
    p = JCParams(gamma0=50.0, lam=1.0)
    res = singularity_measure(jc_family(p), jc_singular_time(p, 0))
    rows.append(_row("gamma0=50 S(t_c[0])", res.S, jc_closed_form_measure(p, 0), 1e-3))
    over = find_singular_points(jc_family(JCParams(gamma0=0.2, lam=1.0)), 20.0)
    rows.append(_row("gamma0=0.2 count(t_c<20)", len(over), 0, 0))
    return rows


REPRO_CASES = {"dephasing": reproduce_dephasing, "jc": reproduce_jc}


def cmd_reproduce(args):
    if args.case not in REPRO_CASES:
        raise UsageError(f"unknown case {args.case!r}; expected one of {sorted(REPRO_CASES)}")
    rows = REPRO_CASES[args.case]()
    print(f"{'quantity':<26} {'numeric':>14} {'closed form':>14} {'|diff|':>10} {'tol':>8}  result")
    for r in rows:
        print(f"{r['quantity']:<26} {r['numeric']:>14.8g} {r['closed_form']:>14.8g} "
              f"{r['abs_diff']:>10.2e} {r['tol']:>8.0e}  {'PASS' if r['pass'] else 'FAIL'}")
    return 0 if all(r["pass"] for r in rows) else 2


# -- argument parsing ----------------------------------------------------------------


def _model_args(p):
    p.add_argument("--model", required=True,
                   help="dephasing | jc | semigroup | file:PATH | kraus:PATH")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", default=[],
                   help="model parameter, repeatable (dephasing: A, N; jc: gamma0, lambda; semigroup: rate)")


def build_parser():
    parser = _Parser(prog="dmsing", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scan", help="locate singular points on a time grid")
    _model_args(p)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--grid-points", type=int, default=2000)
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)
    p.add_argument("--time-tol", type=float, default=TIME_TOL)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--measure", action="store_true", help="also compute S and N_M")
    p.add_argument("--outer-grid", type=int, default=400)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("measure", help="singularity measure at one t_c")
    _model_args(p)
    p.add_argument("--tc", type=float, required=True)
    p.add_argument("--t-max", type=float)
    p.add_argument("--outer-grid", type=int, default=400)
    p.add_argument("--refine-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("decompose", help="solve for the intermediate map Lambda(t2, t1)")
    _model_args(p)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)
    p.add_argument("--check-cp", action="store_true")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("nonmarkov", help="sum of singularity measures over a horizon")
    _model_args(p)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--grid-points", type=int, default=2000)
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)
    p.add_argument("--outer-grid", type=int, default=400)
    p.set_defaults(func=cmd_nonmarkov)

    p = sub.add_parser("classify", help="CP-divisible / positive-only / not-positive / no-decomposition")
    _model_args(p)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--rank-tol", type=float, default=RANK_TOL)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("reproduce", help="compare the built-in examples with closed forms")
    p.add_argument("--case", required=True)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dmsing: error: {exc}", file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as exc:
        print(f"dmsing: numerical failure: {exc}", file=sys.stderr)
        return 2
    except USAGE_ERRORS as exc:
        print(f"dmsing: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
