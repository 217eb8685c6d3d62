"""Command-line driver.

Exit codes: 0 success or agreement, 1 disagreement or failed check,
2 precision or bound exhaustion, 3 calibration failure, 4 schema error,
64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import bf
from .errors import (
    BoundExceeded,
    CalibrationFailure,
    MuPositive,
    NonIntegerSum,
    NotStabilized,
    PrecisionExhausted,
    SchemaError,
)
from .lfunction import (
    BranchSpec,
    Convention,
    branch_by_interpolation,
    branch_by_stickelberger,
    calibrate,
    compare_images,
    constant_term_anchor,
    held_out_residuals,
    interpolation_image,
)
from .padic import PrimeContext
from .theorem import (
    DEFAULT_PRECISION,
    branch_polynomials,
    growth_check,
    growth_table,
    load_fixtures,
    run_theorem,
)

EXIT_OK, EXIT_FAIL, EXIT_PRECISION, EXIT_CALIBRATION, EXIT_SCHEMA, EXIT_USAGE = 0, 1, 2, 3, 4, 64

DEFAULTS = {
    "p": None,
    "k": None,
    "n": 0,
    "prec": DEFAULT_PRECISION,
    "trunc": 8,
    "json": False,
    "seed": 0,
    "fixtures": None,
    "guard": 2,
    "pairs": 200,
    "random": False,
    "instance": None,
    "poly": None,
    "levels": 1,
    "mis_twist": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(sp: argparse.ArgumentParser) -> None:
    # defaults are None so that config-file values can fill the gaps
    sp.add_argument("--p", type=int, help="odd prime")
    sp.add_argument("--k", type=int, help="odd component index, k != 1 mod (p-1)")
    sp.add_argument("--n", type=int, help="group-ring level (growth: largest level)")
    sp.add_argument("--prec", type=int, help=f"p-adic precision M (default {DEFAULT_PRECISION})")
    sp.add_argument("--trunc", type=int, help="power series truncation N (default 8)")
    sp.add_argument("--json", action="store_const", const=True, help="emit JSON")
    sp.add_argument("--seed", type=int, help="random seed (default 0)")
    sp.add_argument("--fixtures", help="class-group fixture file, or 'bundled'")
    sp.add_argument("--config", help="JSON config file; command-line flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arithpath", description="p-adic L-function branches and finite BF path integrals")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("branch", help="branch series, lambda, P and Q = P(t-1)")
    _common(sp)

    sp = sub.add_parser("theorem", help="compare the L-function side with the BF side at level n")
    _common(sp)

    sp = sub.add_parser("growth", help="CSV table of (n, e_n, delta e_n)")
    _common(sp)
    sp.add_argument("--poly", help="distinguished polynomial coefficients, low degree first, comma separated")

    sp = sub.add_parser("gauss", help="evaluate BF sums of an instance file or random instances")
    _common(sp)
    sp.add_argument("instance", nargs="?", help="instance JSON file ('example' for the bundled one)")
    sp.add_argument("--random", action="store_const", const=True, help="generate random instances")
    sp.add_argument("--pairs", type=int, help="number of random instances (default 200)")

    sp = sub.add_parser("interp-check", help="held-out nodes and cross-construction agreement")
    _common(sp)
    sp.add_argument("--levels", type=int, help="check group-ring levels 0..LEVELS (default 1)")
    sp.add_argument("--guard", type=int, help="digits g excluded from comparisons (default 2)")
    sp.add_argument("--mis-twist", dest="mis_twist", action="store_const", const=True, help="debug: use a wrong Stickelberger twist")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """flags > config file > defaults."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"config file {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise SchemaError("config file must hold a JSON object")
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise SchemaError(f"config file has unknown keys {sorted(unknown)}")
        opts.update(cfg)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            opts[key] = value
    return opts


def _require(opts: dict, *keys: str) -> None:
    missing = [k for k in keys if opts.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k for k in missing))


def _spec(opts: dict, N: int | None = None) -> BranchSpec:
    _require(opts, "p", "k")
    try:
        return BranchSpec(PrimeContext(opts["p"], opts["prec"]), opts["k"], N or opts["trunc"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(obj, opts: dict, text: str) -> None:
    if opts["json"]:
        print(json.dumps(obj, sort_keys=True, indent=2))
    else:
        print(text)


def _table(rows: list[list], header: list[str]) -> str:
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


# -- subcommands -----------------------------------------------------------------------------


def cmd_branch(opts: dict) -> int:
    spec = _spec(opts)
    series = branch_by_interpolation(spec)
    lam, P, Q = branch_polynomials(spec.p, spec.k, opts["prec"])
    cal = calibrate(spec)
    report = {
        "p": spec.p,
        "k": spec.k,
        "precision": opts["prec"],
        "truncation": spec.N,
        "coefficients": [{"degree": t, "value": c.value, "precision": c.prec} for t, c in enumerate(series.coeffs)],
        "lambda": lam,
        "distinguished_polynomial": P,
        "q_polynomial": Q,
        "constant_term_valuation": constant_term_anchor(spec),
        "calibration": cal.as_dict(),
    }
    rows = [[t, c.value, c.prec] for t, c in enumerate(series.coeffs)]
    text = "\n".join(
        [
            f"branch p={spec.p} k={spec.k}  (coefficients mod p^precision)",
            _table(rows, ["t", "coefficient", "precision"]),
            f"lambda = {lam}",
            f"P(T) = {P}  (low degree first)",
            f"Q(t) = P(t-1) = {Q}",
        ]
    )
    _emit(report, opts, text)
    return EXIT_OK


def _fixtures(opts: dict):
    f = opts.get("fixtures")
    if not f:
        return None
    return load_fixtures(None if f == "bundled" else f)


def cmd_theorem(opts: dict) -> int:
    _require(opts, "p", "k")
    _spec(opts)
    report = run_theorem(opts["p"], opts["k"], opts["n"], opts["prec"], fixtures=_fixtures(opts))
    d = report.as_dict()
    text = "\n".join(
        [
            f"theorem p={report.p} k={report.k} n={report.n}  [{report.mode} mode]",
            f"LHS exponent e = {report.lhs_exponent}   LHS = {report.lhs}",
            f"RHS exponent   = {report.rhs_exponent}   RHS = {report.rhs}",
            f"lambda = {report.lam}   P = {report.distinguished_polynomial}   Q = {report.q_polynomial}",
            f"verdict: {report.verdict}",
        ]
    )
    _emit(d, opts, text)
    return EXIT_OK if report.verdict == "agree" else EXIT_FAIL


def cmd_growth(opts: dict) -> int:
    _require(opts, "p")
    poly = None
    if opts["poly"]:
        try:
            poly = [int(x) for x in str(opts["poly"]).split(",")]
        except ValueError:
            raise UsageError("--poly takes comma-separated integers") from None
        lam = len(poly) - 1
        k = opts["k"]
    else:
        _spec(opts)
        k = opts["k"]
        lam = branch_polynomials(opts["p"], k, opts["prec"])[0]
    try:
        rows = growth_table(opts["p"], k, opts["n"], opts["prec"], poly=poly)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    check = growth_check(rows, lam)
    if opts["json"]:
        print(json.dumps({"p": opts["p"], "k": k, "rows": rows, "check": check}, sort_keys=True, indent=2))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "e_n", "delta_e", "delta_equals_lambda"])
        for r in rows:
            w.writerow([r["n"], r["e"], "" if r["delta"] is None else r["delta"], int(r["delta"] == lam)])
        sys.stdout.write(buf.getvalue())
    if len(rows) > 1 and not check["persists"]:
        print(f"growth: delta e_n does not settle at lambda={lam}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _gauss_report(inst: bf.BFInstance) -> dict:
    rep = {"closed_form": bf.bf_sum_closed_form(inst), "pairs": inst.A.order * inst.B.order}
    if rep["pairs"] <= bf.ENUMERATION_BOUND:
        try:
            rep["bruteforce"] = bf.bf_sum_bruteforce(inst)
            rep["integral"] = True
        except NonIntegerSum:
            rep["bruteforce"] = None
            rep["integral"] = False
        rep["agree"] = rep["bruteforce"] == rep["closed_form"]
    else:
        rep["bruteforce"] = None
        rep["note"] = "enumeration bound exceeded; closed form only"
    if inst.grading is not None:
        g = bf.graded_bf_sum(inst)
        rep["levels"] = {str(k): v for k, v in sorted(g.levels.items())}
        rep["splits"] = g.splits
    return rep


def cmd_gauss(opts: dict) -> int:
    if opts["random"]:
        rng = np.random.default_rng(opts["seed"])
        agree = integral = 0
        failures = []
        for i in range(opts["pairs"]):
            p = int(rng.choice([3, 5, 7]))
            m = int(rng.integers(1, 4))
            inst = bf.random_instance(rng, p, m, perfect=bool(i % 2))
            rep = _gauss_report(inst)
            integral += rep["integral"]
            if rep["agree"]:
                agree += 1
            else:
                failures.append(bf.instance_to_dict(inst))
        out = {"seed": opts["seed"], "instances": opts["pairs"], "agreements": agree, "integral": integral, "failures": failures}
        _emit(out, opts, f"{agree}/{opts['pairs']} oracle agreements, {integral}/{opts['pairs']} integral sums")
        return EXIT_OK if agree == opts["pairs"] else EXIT_FAIL
    path = opts["instance"]
    if not path:
        raise UsageError("gauss needs an instance file or --random")
    if path == "example":
        inst = bf.instance_from_dict(json.loads(resources.files("arithpath.data").joinpath("example_instance.json").read_text()))
    else:
        inst = bf.load_instance(path)
    rep = _gauss_report(inst)
    rep["instance"] = bf.instance_to_dict(inst)
    lines = [f"closed form: {rep['closed_form']}", f"brute force: {rep['bruteforce']}"]
    if "levels" in rep:
        lines.append(f"per level: {rep['levels']}  splits: {rep['splits']}")
    _emit(rep, opts, "\n".join(lines))
    ok = rep.get("agree", True) and rep.get("integral", True) and rep.get("splits", True)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_interp_check(opts: dict) -> int:
    spec = _spec(opts, N=max(opts["trunc"], 16))
    g = opts["guard"]
    digits = opts["prec"] - g
    if digits < 1:
        raise UsageError("guard leaves no digits to compare")
    series = branch_by_interpolation(spec)
    held = []
    for l, got, want in held_out_residuals(spec, series):
        ok = got.agrees(want, min(digits, got.prec))
        held.append({"l": l, "computed": got.value, "expected": want.value, "certified": got.prec, "pass": ok})
    cal = calibrate(spec)
    conv = cal.convention
    if opts["mis_twist"]:
        conv = Convention("1-k", conv.exponent_sign, conv.sign)
    levels = []
    for n in range(opts["levels"] + 1):
        row = {"n": n}
        try:
            image = interpolation_image(spec, n, digits)
            cmp = compare_images(image, branch_by_stickelberger(spec, n, conv))
            row.update(cmp)
            row["pass"] = cmp["agree"] and cmp["min_certified"] >= digits
        except BoundExceeded as exc:
            row.update({"pass": False, "error": str(exc)})
        levels.append(row)
    passed = all(h["pass"] for h in held) and all(r["pass"] for r in levels)
    report = {
        "p": spec.p,
        "k": spec.k,
        "precision": opts["prec"],
        "guard": g,
        "held_out": held,
        "levels": levels,
        "calibration": cal.as_dict(),
        "convention_used": conv.as_dict(),
        "pass": passed,
    }
    text = "\n".join(
        [f"held-out l={h['l']}: {'ok' if h['pass'] else 'FAIL'}" for h in held]
        + [f"level {r['n']}: {'ok' if r['pass'] else 'FAIL'}" + (f" ({r['error']})" if "error" in r else "") for r in levels]
        + [f"interp-check: {'pass' if passed else 'fail'}"]
    )
    _emit(report, opts, text)
    return EXIT_OK if passed else EXIT_FAIL


COMMANDS = {
    "branch": cmd_branch,
    "theorem": cmd_theorem,
    "growth": cmd_growth,
    "gauss": cmd_gauss,
    "interp-check": cmd_interp_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"arithpath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"arithpath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PrecisionExhausted, MuPositive, BoundExceeded, NotStabilized) as exc:
        print(f"arithpath: {type(exc).__name__}: {exc}. Retry with a larger --prec or --trunc.", file=sys.stderr)
        return EXIT_PRECISION
    except CalibrationFailure as exc:
        print(f"arithpath: calibration failed: {exc}; attempted {json.dumps(exc.attempted, sort_keys=True)}", file=sys.stderr)
        return EXIT_CALIBRATION
    except SchemaError as exc:
        print(f"arithpath: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
