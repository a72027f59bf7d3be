"""Command-line interface: ``pseudoexit <command> [options]``.

Commands write one table each, as ``key=value`` text (default), CSV or JSON.
Exit codes: 0 success, 1 failed verification, 2 bad arguments, 3 degenerate
request (lambda = 0), 4 precision loss under ``--strict``.
"""
import argparse
import csv
import io
import json
import math
import sys
import warnings
from fractions import Fraction

import numpy as np

from . import __version__
from . import hermite_exact as he
from . import laplace_domain as ld
from .core import ProcessParams, compute_roots
from .inversion import InversionConfig, PrecisionLossWarning, exit_joint_weights, exit_time_density, \
    survival_probability

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DEGENERATE, EXIT_PRECISION = 0, 1, 2, 3, 4


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def rational(text):
    """Parse ``'1/3'``, ``'0.25'`` or ``'2'`` into an exact Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def grid_spec(text, log):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:count, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if count < 1 or hi < lo or (count > 1 and hi == lo) or lo < 0:
        raise argparse.ArgumentTypeError(f"grid needs 0 <= lo < hi and count >= 1, got {text!r}")
    if count == 1:
        return np.array([lo])
    if log and lo > 0:
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def _add_instance(p, x=True):
    p.add_argument("--n", type=int, default=2, help="order N (default 2)")
    p.add_argument("--a", type=rational, default=Fraction(0), help="lower endpoint (default 0)")
    p.add_argument("--b", type=rational, default=Fraction(1), help="upper endpoint (default 1)")
    if x:
        p.add_argument("--x", type=rational, default=None, help="start point (default midpoint)")


def _add_output(p):
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--out", default=None, help="write to this path instead of stdout")


def _add_inversion(p):
    p.add_argument("--time-grid", default="0.01:1:10", help="lo:hi:count, linear (default 0.01:1:10)")
    p.add_argument("--method", choices=("talbot", "gs", "euler"), default="talbot")
    p.add_argument("--nodes", type=int, default=None, help="transform evaluations per time (default 32)")
    p.add_argument("--digits", type=int, default=None, help="extended precision digits")
    p.add_argument("--strict", action="store_true",
                   help="cross-check against a second method; exit 4 on disagreement")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pseudoexit",
        description="Exit time and exit place of pseudo-Brownian motion from an interval.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roots", help="the 2N roots theta_l")
    p.add_argument("--n", type=int, default=2)
    _add_output(p)

    p = sub.add_parser("laplace", help="Delta and the ratios Delta_k^+-/Delta on a lambda grid")
    _add_instance(p)
    p.add_argument("--lambda-grid", default="0.01:100:9", help="lo:hi:count, logarithmic")
    _add_output(p)

    p = sub.add_parser("hermite", help="Hermite polynomials H_k^+- and their values at x")
    _add_instance(p)
    _add_output(p)

    p = sub.add_parser("ruin", help="probabilities of leaving through a or through b first")
    _add_instance(p)
    _add_output(p)

    p = sub.add_parser("moments", help="E_x[X^p] at the exit position")
    _add_instance(p)
    p.add_argument("--p", type=int, required=True, help="moment order")
    _add_output(p)

    p = sub.add_parser("density", help="exit-time density I, distribution J, survival S")
    _add_instance(p)
    _add_inversion(p)
    p.add_argument("--joint", action="store_true", help="also invert every weight I_k^+-")
    _add_output(p)

    p = sub.add_parser("survival", help="survival probability by direct inversion")
    _add_instance(p)
    _add_inversion(p)
    _add_output(p)

    p = sub.add_parser("verify", help="run the built-in verification suites")
    p.add_argument("--n", type=int, action="append", default=None,
                   help="restrict to this order (repeatable); default runs every suite")
    return parser


def _params(args):
    try:
        params = ProcessParams(args.n, args.a, args.b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x = getattr(args, "x", None)
    if x is None:
        x = (params.a + params.b) / 2
    if not params.a <= x <= params.b:
        raise UsageError(f"--x {x} outside [{params.a}, {params.b}]")
    return params, x


def _inversion_config(args, times):
    method = {"talbot": "talbot", "gs": "gaver_stehfest", "euler": "euler_bromwich"}[args.method]
    nodes = args.nodes if args.nodes is not None else 32
    try:
        return InversionConfig(method, nodes, args.digits, tuple(times), cross_check=args.strict)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def _fmt_float(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def _json_value(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else _fmt_float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _text_value(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render(columns, rows, fmt, metadata):
    """Serialize a table given as column names and row tuples."""
    if fmt == "json":
        table = {c: [_json_value(r[i]) for r in rows] for i, c in enumerate(columns)}
        meta = {k: _json_value(v) for k, v in metadata.items()}
        return json.dumps({"metadata": meta, "columns": table}, indent=2) + "\n"
    if fmt == "csv":
        exact = [any(isinstance(r[i], Fraction) for r in rows) for i in range(len(columns))]
        header = []
        for c, e in zip(columns, exact):
            header += [c, f"{c}_exact"] if e else [c]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            out = []
            for v, e in zip(r, exact):
                if isinstance(v, (Fraction, float, np.floating)):
                    out.append(_fmt_float(v))
                else:
                    out.append(v)
                if e:
                    out.append(_json_value(v) if isinstance(v, Fraction) else "")
            w.writerow(out)
        return buf.getvalue()
    lines = [" ".join(f"{c}={_text_value(v)}" for c, v in zip(columns, r)) for r in rows]
    return "\n".join(lines) + "\n"


def _metadata(args, params=None, **extra):
    meta = {"command": args.command, "version": __version__}
    if params is not None:
        meta.update(N=params.N, a=params.a, b=params.b)
    meta.update(extra)
    return meta


# --------------------------------------------------------------------------
# commands; each returns (columns, rows, metadata, exit_code)
# --------------------------------------------------------------------------

def cmd_roots(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    r = compute_roots(args.n)
    rows = [(i + 1, float(t.real), float(t.imag), float(r.angles[i] / math.pi)) for i, t in enumerate(r.roots)]
    return ["l", "re", "im", "angle_over_pi"], rows, {"command": "roots", "N": args.n}, EXIT_OK


def cmd_laplace(args):
    params, x = _params(args)
    try:
        lams = grid_spec(args.lambda_grid, log=True)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc)) from None
    if np.any(lams == 0):
        raise ld.DegenerateError("Delta(0) = 0: the ratios are undefined at lambda = 0")
    fparams = ProcessParams(params.N, float(params.a), float(params.b))
    roots = compute_roots(fparams)
    N = params.N
    cols = ["lambda", "delta_sign", "delta_log_abs"] + \
        [f"ratio_minus_{k}" for k in range(N)] + [f"ratio_plus_{k}" for k in range(N)]
    rows = []
    for lam in lams:
        ev = ld.evaluate(fparams, roots, float(lam), float(x))
        sign = 1.0 if ev.delta.mantissa.real >= 0 else -1.0
        rows.append((float(lam), sign, ev.delta.log_abs)
                    + tuple(float(v.real) for v in ev.ratio_minus)
                    + tuple(float(v.real) for v in ev.ratio_plus))
    return cols, rows, _metadata(args, params, x=x), EXIT_OK


def cmd_hermite(args):
    params, x = _params(args)
    basis = he.build_hermite_basis(params)
    rows = []
    for side, polys in (("minus", basis.h_minus), ("plus", basis.h_plus)):
        for k, h in enumerate(polys):
            coeffs = " ".join(str(c) for c in h.coeffs)
            rows.append((side, k, h(x), coeffs))
    return ["side", "k", "value", "coefficients"], rows, _metadata(args, params, x=x), EXIT_OK


def cmd_ruin(args):
    params, x = _params(args)
    lo, hi = he.ruin_probabilities(he.build_hermite_basis(params), x)
    return ["p_lower", "p_upper"], [(lo, hi)], _metadata(args, params, x=x), EXIT_OK


def cmd_moments(args):
    params, x = _params(args)
    if args.p < 0:
        raise UsageError("--p must be >= 0")
    basis = he.build_hermite_basis(params)
    value = he.expected_exit_polynomial(basis, he.RationalPoly.monomial(args.p), x)
    return ["p", "moment", "value"], [(args.p, value, float(value))], _metadata(args, params, x=x), EXIT_OK


def _time_grid(args):
    try:
        times = grid_spec(args.time_grid, log=False)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc)) from None
    if np.any(times <= 0):
        raise UsageError("time grid must be positive")
    return times


def _inversion_params(args):
    params, x = _params(args)
    if not params.a < x < params.b:
        raise UsageError("--x must lie strictly inside (a, b) for time-domain commands")
    return params, ProcessParams(params.N, float(params.a), float(params.b)), float(x)


def cmd_density(args):
    params, fparams, x = _inversion_params(args)
    cfg = _inversion_config(args, _time_grid(args))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PrecisionLossWarning)
        table = (exit_joint_weights if args.joint else exit_time_density)(fparams, x, cfg)
    cols = table.columns()
    names = list(cols) + ["flagged"]
    rows = [tuple(float(cols[c][i]) for c in cols) + (int(table.flagged[i]),) for i in range(len(table.t))]
    code = EXIT_PRECISION if args.strict and np.any(table.flagged) else EXIT_OK
    meta = _metadata(args, params, x=x, method=cfg.method, nodes=cfg.node_count,
                     digits=cfg.precision_digits, cross_check_rtol=1e-4 if args.strict else None)
    return names, rows, meta, code


def cmd_survival(args):
    params, fparams, x = _inversion_params(args)
    times = _time_grid(args)
    cfg = _inversion_config(args, times)
    code = EXIT_OK
    rows = []
    for t in times:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PrecisionLossWarning)
            s = survival_probability(fparams, x, float(t), cfg)
        flagged = any(issubclass(w.category, PrecisionLossWarning) for w in caught)
        if flagged and args.strict:
            code = EXIT_PRECISION
        rows.append((float(t), s, int(flagged)))
    meta = _metadata(args, params, x=x, method=cfg.method, nodes=cfg.node_count, digits=cfg.precision_digits)
    return ["t", "S", "flagged"], rows, meta, code


def cmd_verify(args):
    from . import verify

    results = verify.run(orders=args.n)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} suites passed")
    return None, None, None, EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "roots": cmd_roots,
    "laplace": cmd_laplace,
    "hermite": cmd_hermite,
    "ruin": cmd_ruin,
    "moments": cmd_moments,
    "density": cmd_density,
    "survival": cmd_survival,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on bad flags
    try:
        columns, rows, meta, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pseudoexit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ld.DegenerateError as exc:
        print(f"pseudoexit {args.command}: degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    if columns is not None:
        text = render(columns, rows, args.format, meta)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    if code == EXIT_PRECISION:
        print(f"pseudoexit {args.command}: precision loss flagged by the cross-check", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
