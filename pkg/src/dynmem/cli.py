"""``dynmem`` command-line front end.

Exit codes: 0 success, 1 verification failure, 2 runtime divergence,
3 invalid arguments or configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from dynmem.generators import (
    GeneratorError,
    GeneratorPreset,
    ParamSet,
    PresetKind,
    make_preset,
    parse_generator,
    eval_generator,
)
from dynmem.grid import Grid, GridFunction
from dynmem.kernels import kernel_eval, make_kernel
from dynmem.laplace import InversionConfig, InversionError, InversionMethod, invert
from dynmem.langevin import DivergenceError, solve
from dynmem.mittag_leffler import MLError, MLQuery, ml_dynamic, relaxation_solve
from dynmem.operators import (
    DerivMode,
    QuadratureScheme,
    Side,
    caputo_derivative,
    fractional_integral,
    rl_derivative,
)
from dynmem.problem_io import ConfigError, load_problem
from dynmem.verify import SUITES, preset_from_name, run_verify

EXIT_OK, EXIT_VERIFY, EXIT_DIVERGED, EXIT_INVALID = 0, 1, 2, 3

COMPARE_PRESETS = ("classical", "tempered", "affine", "power-scaled", "hybrid")

# (operator family, status, generator, note)
PRESET_ROWS = [
    ("Riemann-Liouville", "in-scope", "p", "classical power-law kernel"),
    ("Caputo", "in-scope", "p", "classical kernel of order 1-alpha acting on x'"),
    ("Tempered fractional", "in-scope", "p + lambda", "exponentially tempered power law"),
    ("Cotangent fractional", "in-scope", "a * p + b",
     "a = sin(theta), b = cos(theta); kernel carries the sin(theta)^-alpha factor"),
    ("Power-scaled", "in-scope", "p^rho", "convolution kernel t^(rho alpha - 1)/Gamma(rho alpha)"),
    ("Hybrid", "in-scope", "(p + lambda)^mu + eta * p^nu",
     "tempered and power-law memory in one generator"),
    ("Prabhakar-type", "in-scope (custom curve)", "p^a + c",
     "only the gamma-power family (p^a + c)^-gamma with c >= 0"),
    ("Weyl fractional", "out-of-scope", "", "infinite-memory lower terminal, not a causal convolution on [0, T]"),
    ("Riesz fractional", "out-of-scope", "", "two-sided symmetric kernel"),
    ("Hadamard-type", "out-of-scope", "", "logarithmic kernel is not a time-difference convolution"),
    ("Hilfer derivative", "out-of-scope", "", "composite operator, not a single generated kernel"),
    ("Katugampola-type", "out-of-scope", "",
     "kernel in (t^rho - s^rho) is not a time-difference convolution"),
    ("Sonine-kernel type", "out-of-scope", "", "inverse-pair construction not implemented"),
    ("Caputo-Fabrizio", "out-of-scope", "",
     "alpha enters the kernel outside a symbol power; comparison curve only (kernel --compare)"),
    ("Atangana-Baleanu", "out-of-scope", "", "alpha enters the kernel outside a symbol power"),
    ("Distributed-order", "out-of-scope", "", "integral over orders, not a single symbol power"),
    ("Conformable derivative", "out-of-scope", "", "local operator without memory"),
]


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise CliError(message)


def _fmt(v: float) -> str:
    v = float(v)
    return format(v, ".17g") if math.isfinite(v) else "nan"


def write_csv(header: Sequence[str], columns: Sequence[np.ndarray], out) -> None:
    out.write(",".join(header) + "\n")
    cols = [np.asarray(c, dtype=float) for c in columns]
    for row in zip(*cols):
        out.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path: str) -> tuple[list[str], Grid, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise CliError(f"{path}: need a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header) or data.shape[1] < 2:
        raise CliError(f"{path}: expected columns t,value...")
    t = data[:, 0]
    n = t.size - 1
    if n < 1 or t[0] != 0.0:
        raise CliError(f"{path}: t must start at 0 with at least two samples")
    grid = Grid(t[-1], n)
    if not np.allclose(t, grid.nodes, rtol=0, atol=1e-9 * max(1.0, t[-1])):
        raise CliError(f"{path}: t must be a uniform grid")
    return header, grid, data[:, 1:]


def _theta(pairs: Sequence[str] | None) -> dict:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--theta expects k=v, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError as exc:
            raise CliError(f"--theta {item!r}: {exc}") from exc
    return out


def _generator(args):
    theta = _theta(args.theta)
    if getattr(args, "preset", None):
        kind = PresetKind(args.preset)
        return make_preset(GeneratorPreset(kind, theta))
    return parse_generator(args.generator), ParamSet(theta)


def _config(args) -> InversionConfig:
    return InversionConfig(InversionMethod(args.method), args.nodes)


def _open_out(args):
    return open(args.output, "w", newline="") if args.output else sys.stdout


def _add_generator_flags(p, preset=True):
    p.add_argument("--generator", default="p", help="generator expression in p")
    if preset:
        p.add_argument("--preset", choices=[k.value for k in PresetKind if k is not PresetKind.Custom],
                       help="named generator family (overrides --generator)")
    p.add_argument("--theta", action="append", metavar="K=V", help="parameter binding")
    p.add_argument("--method", default="talbot", choices=["talbot", "stehfest"])
    p.add_argument("--nodes", type=int, default=None, help="inversion node count")


def _add_grid_flags(p, t_end=1.0, steps=256):
    p.add_argument("--t-end", type=float, default=t_end)
    p.add_argument("--steps", type=int, default=steps)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dynmem", description="Dynamic-memory fractional operators.")
    parser.add_argument("--output", "-o", help="output path (default stdout)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("kernel", help="kernel and cumulative kernels on a grid")
    _add_generator_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    _add_grid_flags(p)
    p.add_argument("--compare", action="store_true",
                   help="one psi column per preset plus an exponential comparison curve")

    p = sub.add_parser("invert", help="numerically invert a Laplace symbol")
    p.add_argument("--symbol", required=True, help="symbol expression in p, e.g. '(p^2 + 1)^-1'")
    p.add_argument("--theta", action="append", metavar="K=V")
    p.add_argument("--method", default="talbot", choices=["talbot", "stehfest"])
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--cross-validate", action="store_true",
                   help="emit Talbot and Stehfest columns side by side")
    _add_grid_flags(p)

    for name, helptext in (("integral", "fractional integral of CSV samples"),
                           ("derivative", "fractional derivative of CSV samples")):
        p = sub.add_parser(name, help=helptext)
        _add_generator_flags(p)
        p.add_argument("--input", required=True, help="CSV with columns t,value...")
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--side", default="left", choices=["left", "right"])
        if name == "integral":
            p.add_argument("--scheme", default="trapezoid", choices=["rectangle", "trapezoid"])
        else:
            p.add_argument("--kind", default="caputo", choices=["caputo", "rl"])
            p.add_argument("--deriv-mode", default="finite-difference",
                           choices=[m.value for m in DerivMode])
            p.add_argument("--derivative-input", help="CSV of x' samples for --deriv-mode supplied")

    p = sub.add_parser("ml", help="dynamic-memory Mittag-Leffler function")
    _add_generator_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    _add_grid_flags(p)

    p = sub.add_parser("relax", help="relaxation equation x0 E(-kappa, t)")
    _add_generator_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--x0", type=float, default=1.0)
    _add_grid_flags(p)

    p = sub.add_parser("langevin", help="solve a Langevin problem from a JSON config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("verify", help="run the identity suites")
    p.add_argument("--preset", action="append",
                   help="preset name or generator expression (repeatable; default: all presets)")
    p.add_argument("--suite", action="append", choices=sorted(SUITES),
                   help="suite to run (repeatable; default: all)")
    p.add_argument("--method", default="talbot", choices=["talbot", "stehfest"])
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--json", help="also write the JSON report to this path")
    _add_grid_flags(p)

    sub.add_parser("presets", help="list generator families and their scope")
    return parser


def _cmd_kernel(args, out) -> int:
    grid = Grid(args.t_end, args.steps)
    config = _config(args)
    t = grid.nodes
    if args.compare:
        header, cols = ["t"], [t]
        for name in COMPARE_PRESETS:
            g, th = make_preset(name)
            k = make_kernel(g, th, args.alpha, config)
            header.append(name)
            cols.append(_kernel_column(k, t, 0))
        if 0 < args.alpha < 1:
            # prescribed exponential kernel with unit normalization, for comparison only
            a = args.alpha
            header.append("caputo-fabrizio")
            cols.append(np.exp(-a * t / (1 - a)) / (1 - a))
        write_csv(header, cols, out)
        return EXIT_OK
    g, th = _generator(args)
    k = make_kernel(g, th, args.alpha, config)
    write_csv(["t", "psi", "K1", "K2"],
              [t, _kernel_column(k, t, 0), _kernel_column(k, t, 1), _kernel_column(k, t, 2)],
              out)
    return EXIT_OK


def _kernel_column(kernel, t, level):
    col = np.empty_like(t)
    col[1:] = kernel_eval(kernel, t[1:], level)
    try:
        col[0] = kernel_eval(kernel, 0.0, level)
    except (ValueError, ArithmeticError):
        col[0] = np.nan
    return col


def _cmd_invert(args, out) -> int:
    expr = parse_generator(args.symbol)
    theta = ParamSet(_theta(args.theta))
    grid = Grid(args.t_end, args.steps)

    def symbol(p):
        return eval_generator(expr, theta, p)

    t = grid.nodes
    if args.cross_validate:
        cols = [t]
        for method in ("talbot", "stehfest"):
            col = np.full_like(t, np.nan)
            col[1:] = invert(symbol, t[1:], InversionConfig(InversionMethod(method)))
            cols.append(col)
        write_csv(["t", "talbot", "stehfest"], cols, out)
        return EXIT_OK
    col = np.full_like(t, np.nan)
    col[1:] = invert(symbol, t[1:], _config(args))
    write_csv(["t", "f"], [t, col], out)
    return EXIT_OK


def _cmd_operator(args, out) -> int:
    header, grid, values = read_csv(args.input)
    g, th = _generator(args)
    config = _config(args)
    side = Side(args.side)
    cols = [grid.nodes]
    for i in range(values.shape[1]):
        x = GridFunction(grid, values[:, i])
        if args.command == "integral":
            y = fractional_integral(g, th, args.alpha, x, QuadratureScheme(args.scheme), side,
                                    config)
        elif args.kind == "rl":
            y = rl_derivative(g, th, args.alpha, x, side, config)
        else:
            mode = DerivMode(args.deriv_mode)
            dx = None
            if mode is DerivMode.Supplied:
                if not args.derivative_input:
                    raise CliError("--deriv-mode supplied needs --derivative-input")
                _, dgrid, dvals = read_csv(args.derivative_input)
                if dgrid != grid or dvals.shape != values.shape:
                    raise CliError("derivative samples must match the input grid and columns")
                dx = GridFunction(grid, dvals[:, i])
            y = caputo_derivative(g, th, args.alpha, x, side, mode, dx, config)
        cols.append(y.values)
    write_csv(header, cols, out)
    return EXIT_OK


def _cmd_ml(args, out) -> int:
    g, th = _generator(args)
    grid = Grid(args.t_end, args.steps)
    e = ml_dynamic(MLQuery(g, th, args.alpha, args.lam, grid, _config(args)))
    write_csv(["t", "E"], [grid.nodes, e.values], out)
    return EXIT_OK


def _cmd_relax(args, out) -> int:
    g, th = _generator(args)
    grid = Grid(args.t_end, args.steps)
    x = relaxation_solve(g, th, args.alpha, args.kappa, args.x0, grid, _config(args))
    write_csv(["t", "x"], [grid.nodes, x.values], out)
    return EXIT_OK


def _cmd_langevin(args, out) -> int:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    problem, options = load_problem(cfg)
    traj = solve(problem, options)
    header = ["t"] + [f"x_{i + 1}" for i in range(problem.dim)]
    write_csv(header, [traj.grid.nodes] + [traj.states[:, i] for i in range(problem.dim)], out)
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    names = args.preset or list(COMPARE_PRESETS)
    presets = [preset_from_name(n) for n in names]
    suites = args.suite or sorted(SUITES)
    report = run_verify(presets, suites, Grid(args.t_end, args.steps), _config(args))
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json() + "\n")
    out.write(report.summary() + "\n")
    return EXIT_OK if report.overall else EXIT_VERIFY


def _cmd_presets(args, out) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["operator", "status", "generator", "note"])
    writer.writerows(PRESET_ROWS)
    out.write(buf.getvalue())
    return EXIT_OK


COMMANDS = {
    "kernel": _cmd_kernel,
    "invert": _cmd_invert,
    "integral": _cmd_operator,
    "derivative": _cmd_operator,
    "ml": _cmd_ml,
    "relax": _cmd_relax,
    "langevin": _cmd_langevin,
    "verify": _cmd_verify,
    "presets": _cmd_presets,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliError as exc:
        print(f"dynmem: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    out = None
    try:
        out = _open_out(args)
        return COMMANDS[args.command](args, out)
    except DivergenceError as exc:
        print(f"dynmem: diverged at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (CliError, ConfigError, GeneratorError, MLError, InversionError, ValueError,
            OSError) as exc:
        print(f"dynmem: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    finally:
        if out is not None and out is not sys.stdout:
            out.close()


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
