"""Command-line front end.

Every subcommand takes its parameters from flags, from an optional
``--config`` file of ``key = value`` lines, or both (flags win).  The
config file may also name the subcommand with ``command = ...``.  Results
go to CSV on stdout or ``--out``; errors go to stderr as one JSON object
and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor

import mpmath as mp

from . import asymptotics, control, cost, spectral, transform
from .plot import Series, emit_plot

COMMANDS = ["cost", "sweep-T", "sweep-eps", "fit", "hum", "verify-transform",
            "critical-times", "prop1", "theorem-chain"]


class ConfigError(ValueError):
    pass


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Keys use ``-`` or ``_``."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            out[key.replace("-", "_")] = value
    return out


def parse_grid(text: str) -> list:
    """``a,b,c`` or ``geom:lo:hi:n`` or ``lin:lo:hi:n``; must be strictly monotone."""
    text = str(text).strip()
    if text.startswith(("geom:", "lin:")):
        kind, lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        if n < 2:
            raise ValueError("a grid needs at least 2 points")
        if kind == "lin":
            vals = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
        else:
            if lo <= 0 or hi <= 0:
                raise ValueError("geometric grids need positive endpoints")
            vals = [lo * (hi / lo) ** (i / (n - 1)) for i in range(n)]
    else:
        vals = [float(v) for v in text.split(",") if v.strip()]
    d = [b - a for a, b in zip(vals, vals[1:])]
    if not vals or not (all(x > 0 for x in d) or all(x < 0 for x in d)):
        raise ValueError(f"grid {text!r} is not strictly monotone")
    return vals


def _add_common(p):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--raw", action="store_true", help="full-precision decimals instead of 20 digits")


def _add_system(p):
    p.add_argument("--L", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--precision", type=int, default=256)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nullcost", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="config file; may set 'command'")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("cost", help="one truncated cost constant")
    _add_common(p)
    _add_system(p)
    p.add_argument("--kind", choices=[k.value for k in cost.CostKind], default="cd")
    p.add_argument("--T", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--pairing", choices=["L2", "H1"], default="L2")
    p.add_argument("--rtol", type=float, default=1e-6)

    for name, var in (("sweep-T", "T"), ("sweep-eps", "eps")):
        p = sub.add_parser(name, help=f"cost over a grid of {var} with a fitted rate")
        _add_common(p)
        _add_system(p)
        p.add_argument("--kind", choices=[k.value for k in cost.CostKind],
                       default="cd" if var == "T" else "ctd")
        p.add_argument("--T", type=float)
        p.add_argument(f"--{var}-grid", dest="grid")
        p.add_argument("--N", type=int)
        p.add_argument("--pairing", choices=["L2", "H1"], default="L2")
        p.add_argument("--rtol", type=float, default=1e-6)
        p.add_argument("--tail", type=float, default=1.0)
        p.add_argument("--unconverged", choices=["drop", "keep"],
                       default="drop" if var == "T" else "keep",
                       help="whether unconverged truncations (lower bounds) enter the fit")
        p.add_argument("--fit-out", help="CSV path for the fit row")
        p.add_argument("--plot", help="SVG path for ln C against 1/parameter")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("fit", help="fit ln C against 1/parameter from a CSV")
    _add_common(p)
    p.add_argument("--samples")
    p.add_argument("--tail", type=float, default=1.0)
    p.add_argument("--plot")

    p = sub.add_parser("hum", help="minimal-norm control for a single-mode datum")
    _add_common(p)
    _add_system(p)
    p.add_argument("--T", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--mode", type=int, default=1)
    p.add_argument("--nx", type=int, default=400)
    p.add_argument("--control-out", help="CSV path for samples of u(t)")

    p = sub.add_parser("verify-transform", help="mode identity and boundary flux identity")
    _add_common(p)
    _add_system(p)
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--h", type=float, default=1e-6)

    p = sub.add_parser("critical-times", help="root of the exponent polynomial")
    _add_common(p)
    p.add_argument("--L", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--precision", type=int, default=256)

    p = sub.add_parser("prop1", help="check the weighted-to-cost implication on samples")
    _add_common(p)
    p.add_argument("--samples")
    p.add_argument("--L", type=float)
    p.add_argument("--K", type=float)

    p = sub.add_parser("theorem-chain", help="bound on the squared transport-diffusion cost")
    _add_common(p)
    _add_system(p)
    p.add_argument("--samples", help="CSV of C_int samples (parameter = horizon)")
    p.add_argument("--T", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    return ap


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise ConfigError(f"{args.command}: missing required parameter(s) "
                          + ", ".join("--" + n.replace("_", "-") for n in missing))


def _digits(args, bits=256):
    return int(bits * math.log10(2)) + 1 if args.raw else 20


def _num(x, digits):
    return mp.nstr(mp.mpf(x), digits, strip_zeros=False)


def _emit(args, header, rows):
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()


def _cost_rows(args, ests):
    rows = [cost.csv_row(e, _digits(args, e.precision_bits)) for e in ests]
    _emit(args, cost.CSV_FIELDS, [[r[k] for k in cost.CSV_FIELDS] for r in rows])


def cmd_cost(args):
    _need(args, "L", "T", "N")
    if args.N >= 2:
        est = cost.convergence_sweep(args.kind, args.T, args.L, args.N, args.M, args.eps,
                                     args.precision, args.pairing, args.rtol)
    else:
        est = cost.observability_cost(args.kind, args.T, args.L, args.N, args.M, args.eps,
                                      args.precision, args.pairing)
    _cost_rows(args, [est])


def _sweep_point(job):
    kind, T, L, N, M, eps, bits, pairing, rtol = job
    if N >= 2:
        return cost.convergence_sweep(kind, T, L, N, M, eps, bits, pairing, rtol)
    return cost.observability_cost(kind, T, L, N, M, eps, bits, pairing)


def _run_jobs(jobs, workers):
    if workers is None or workers <= 1:
        return [_sweep_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, jobs))  # map preserves input order


def _fit_and_plot(args, pairs, xlabel):
    try:
        fit = asymptotics.fit_rate(pairs, args.tail, drop_unconverged=args.unconverged == "drop")
    except ValueError as exc:
        _warn(f"no fit: {exc}")
        return None
    if args.fit_out:
        with open(args.fit_out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=asymptotics.FIT_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerow(fit.row())
    if args.plot:
        xs = [float(1 / mp.mpf(p)) for p, *_ in pairs]
        ys = [float(mp.log(c)) for _, c, *_ in pairs]
        emit_plot(Series("ln C", xs, ys), args.plot, fit=(fit.rate, fit.intercept),
                  xlabel=xlabel, ylabel="ln C")
    return fit


def cmd_sweep(args, var):
    _need(args, "L", "grid", "N")
    grid = parse_grid(args.grid)
    if var == "T":
        jobs = [(args.kind, T, args.L, args.N, args.M, args.eps, args.precision,
                 args.pairing, args.rtol) for T in grid]
    else:
        _need(args, "T", "M")
        if any(not 0 < e < 1 for e in grid):
            raise ValueError("eps grid must lie in (0, 1)")
        jobs = [("ctd", args.T, args.L, args.N, args.M, e, args.precision, "L2", args.rtol)
                for e in grid]
    ests = _run_jobs(jobs, args.workers)
    _cost_rows(args, ests)
    pairs = [(p, e.value, e.converged) for p, e in zip(grid, ests)]
    _fit_and_plot(args, pairs, "1/" + var)


def cmd_fit(args):
    _need(args, "samples")
    samples = asymptotics.read_samples_csv(args.samples)
    fit = asymptotics.fit_rate(samples, args.tail)
    _emit(args, asymptotics.FIT_FIELDS, [[fit.row()[k] for k in asymptotics.FIT_FIELDS]])
    if args.plot:
        emit_plot(Series("ln C", [1 / p for p, _ in samples], [float(mp.log(c)) for _, c in samples]),
                  args.plot, fit=(fit.rate, fit.intercept), xlabel="1/p", ylabel="ln C")


def cmd_hum(args):
    _need(args, "L", "T")
    if args.M is None and args.eps is None:
        spec = spectral.ProblemSpec.heat(args.L)
    else:
        _need(args, "M", "eps")
        spec = spectral.ProblemSpec.transport_diffusion(args.L, args.M, args.eps)
    N = args.N or args.mode
    y0 = spectral.ModeVector.single(spectral.ProblemSpec.heat(args.L), args.mode, N)
    u = control.hum_control(y0, spec, args.T, N, args.precision)
    check = control.verify_null(y0, u, spec, nx=args.nx)
    d = _digits(args, u.precision_bits)
    _emit(args, ["L", "T", "M", "eps", "N", "precision", "norm", "ratio", "ratio_full", "resolved"],
          [[repr(args.L), repr(args.T), "" if args.M is None else repr(args.M),
            "" if args.eps is None else repr(args.eps), N, u.precision_bits,
            _num(u.norm_L2, d), repr(check.ratio), repr(check.ratio_full),
            str(check.resolved).lower()]])
    if args.control_out:
        control.write_control_csv(u, args.control_out, digits=d)


def cmd_verify_transform(args):
    _need(args, "L", "M", "eps")
    params = transform.TransformParams(args.M, args.eps, args.L)
    td = spectral.ProblemSpec.transport_diffusion(args.L, args.M, args.eps)
    heat = spectral.ProblemSpec.heat(args.L)
    rows = []
    with mp.workprec(args.precision):
        for k in range(1, args.kmax + 1):
            psi = lambda t, x, k=k: spectral.adjoint_mode(td, k, t, x)
            phi = transform.map_psi_to_phi(psi, params)
            pts = [(mp.mpf(t), mp.mpf(args.L) * x) for t in (0.01, 0.1, 0.5) for x in (0.1, 0.37, 0.8)]
            dev = max(abs(phi(t, x) - spectral.adjoint_mode(heat, k, t, x)) for t, x in pts)
            bdev = transform.boundary_identity_check(psi, params, [0.01, 0.1, 0.5], h=args.h)
            rows.append([k, args.precision, _num(dev, 6), _num(bdev, 6)])
    _emit(args, ["k", "precision", "mode_deviation", "boundary_deviation"], rows)


def cmd_critical_times(args):
    _need(args, "L", "M")
    with mp.workprec(args.precision):
        T = asymptotics.critical_times(args.L, args.M, None, args.a, args.b)
        print(_num(T, _digits(args, args.precision)))


def cmd_prop1(args):
    _need(args, "samples", "L", "K")
    res = asymptotics.prop1_verify(asymptotics.read_samples_csv(args.samples), args.L, args.K)
    _emit(args, ["passed", "r", "C", "rate"],
          [[str(res.passed).lower(), "" if res.r is None else repr(res.r),
            "" if res.C is None else repr(res.C), repr(res.rate)]])


def cmd_theorem_chain(args):
    _need(args, "samples", "L", "M", "eps", "T", "a", "b")
    params = transform.TransformParams(args.M, args.eps, args.L)
    samples = asymptotics.read_samples_csv(args.samples)
    with mp.workprec(args.precision):
        bound = transform.theorem_chain_bound(samples, params, args.T, args.a, args.b)
        e = transform.chain_exponent(args.L, args.M, args.T, args.a, args.b)
    d = _digits(args, args.precision)
    _emit(args, ["L", "M", "eps", "T", "a", "b", "precision", "exponent", "bound"],
          [[repr(args.L), repr(args.M), repr(args.eps), repr(args.T), repr(args.a), repr(args.b),
            args.precision, _num(e, d), _num(bound, d)]])


DISPATCH = {
    "cost": cmd_cost,
    "sweep-T": lambda a: cmd_sweep(a, "T"),
    "sweep-eps": lambda a: cmd_sweep(a, "eps"),
    "fit": cmd_fit,
    "hum": cmd_hum,
    "verify-transform": cmd_verify_transform,
    "critical-times": cmd_critical_times,
    "prop1": cmd_prop1,
    "theorem-chain": cmd_theorem_chain,
}


def _warn(message):
    print(json.dumps({"warning": message}), file=sys.stderr)


def _provenance(exc) -> str:
    mods = [f.filename for f in traceback.extract_tb(exc.__traceback__)]
    for name in reversed(mods):
        if "nullcost" in name:
            return name.rsplit("/", 1)[-1].removesuffix(".py")
    return "cli"


def _error(exc, command) -> int:
    record = {"error": type(exc).__name__, "message": str(exc),
              "command": command, "module": _provenance(exc)}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return 1


def _config_defaults(sub, config) -> dict:
    """Map config keys (option names with ``_`` for ``-``) onto parser dests."""
    by_key = {}
    for action in sub._actions:
        for opt in action.option_strings:
            by_key[opt.lstrip("-").replace("-", "_")] = action
    out = {}
    for key, value in config.items():
        action = by_key.get(key)
        if action is None or action.dest in ("config", "help"):
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"{key}: expected a boolean, got {value!r}")
            value = value.lower() in ("true", "1", "yes")
        out[action.dest] = value
    return out


def _argv_with_config(argv):
    """Locate ``--config`` anywhere in argv and splice the file's command in."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    config = read_config(path) if path else {}
    if not any(tok in COMMANDS for tok in argv):
        command = config.pop("command", None)
        if command is not None:
            argv = [command] + argv
    else:
        config.pop("command", None)
    return argv, config


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv, config = _argv_with_config(argv)
    except (OSError, ConfigError) as exc:
        return _error(exc, None)
    cmd = next((t for t in argv if t in COMMANDS), None)
    if cmd is None:
        parser.print_usage(sys.stderr)
        return 2
    sub = parser._subparsers._group_actions[0].choices[cmd]
    try:
        sub.set_defaults(**_config_defaults(sub, config))
    except ConfigError as exc:
        return _error(exc, cmd)
    args = parser.parse_args(argv)
    try:
        DISPATCH[args.command](args)
    except Exception as exc:  # reported as a JSON record
        return _error(exc, args.command)
    return 0


if __name__ == "__main__":
    sys.exit(main())
