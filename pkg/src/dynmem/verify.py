"""Theorem-level verification suites run against generator presets.

Each suite turns one analytic identity into discrete residuals and, where
the identity only holds in the limit, into observed convergence orders under
grid halving. Tolerances live in :mod:`dynmem.thresholds`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable

import numpy as np
from scipy.special import gamma

from dynmem.generators import (
    GeneratorPreset,
    PresetKind,
    affine_coefficients,
    make_preset,
    parse_generator,
    ParamSet,
    symbol_power,
)
from dynmem.grid import Grid, GridFunction
from dynmem.kernels import (
    admissibility_check,
    kernel_eval,
    make_kernel,
    monotonicity_probe,
    semigroup_residual,
)
from dynmem.langevin import (
    LangevinProblem,
    SolverOptions,
    check_uniqueness_condition,
    integral_form_forcing,
    manufactured_residual,
)
from dynmem.laplace import InversionConfig, TALBOT, forward_transform
from dynmem.mittag_leffler import MLQuery, ml_classical, ml_dynamic, ml_eigen_residual, \
    ml_initial_value
from dynmem.operators import (
    DerivMode,
    QuadratureScheme,
    Side,
    caputo_derivative,
    caputo_polynomial,
    fractional_integral,
    ibp_residual,
    rl_derivative,
    taylor_reconstruct,
)
from dynmem.report import VerificationReport, observed_order
from dynmem.thresholds import THRESHOLDS

__all__ = ["SUITES", "run_verify", "preset_from_name", "order_check", "thread_count"]

T = THRESHOLDS


def thread_count() -> int:
    """Worker threads from ``DYNMEM_THREADS`` (0 or unset means sequential)."""
    raw = os.environ.get("DYNMEM_THREADS", "0")
    try:
        return max(0, int(raw))
    except ValueError:
        return 0


def order_check(report: VerificationReport, suite: str, name: str, errors,
                min_order: float, note: str = "") -> None:
    """Pass iff errors decay at least like ``h^min_order`` (or sit at roundoff)."""
    errors = [float(e) for e in errors]
    listing = "errors=" + ",".join(f"{e:.3e}" for e in errors)
    note = f"{note}; {listing}" if note else listing
    if all(math.isfinite(e) for e in errors) and max(errors) <= T["roundoff_floor"]:
        report.add(suite, name, max(errors), T["roundoff_floor"], passed=True,
                   note=note + "; all at roundoff")
        return
    orders = observed_order(errors)
    worst = min(orders) if orders else math.nan
    report.add(suite, name, worst, min_order,
               passed=bool(math.isfinite(worst) and worst >= min_order),
               note=note + "; measured = min observed order")


def _levels(grid: Grid, count: int = 3) -> list[Grid]:
    n = grid.n_steps
    steps = [n // 2 ** k for k in range(count - 1, -1, -1)]
    if steps[0] < 8:
        raise ValueError("grid too coarse for a convergence study")
    return [Grid(grid.t_end, s) for s in steps]


def _not_applicable(report: VerificationReport, suite: str, name: str, why: str) -> None:
    report.add(suite, name, math.nan, math.nan, passed=True, note=f"not applicable: {why}")


def _is_classical(g, th) -> bool:
    return affine_coefficients(g, th) == (1.0, 0.0)


Suite = Callable[[str, object, ParamSet, Grid, InversionConfig], VerificationReport]


def suite_admissibility(name, g, th, grid, config):
    sub = admissibility_check(g, th, (0.3, 0.5, 0.7), grid, config,
                              inversion_tol=T["admissibility.inversion_rel"])
    report = VerificationReport()
    for c in sub.checks:
        report.add(c.suite, f"{name}: {c.name}", c.measured, c.threshold, c.passed, c.note)
    return report


def suite_semigroup(name, g, th, grid, config):
    report = VerificationReport()
    s = "semigroup"
    t_min = T["semigroup.t_min_fraction"] * grid.t_end
    for a, b in ((0.5, 0.5), (0.3, 0.6)):
        errs = [semigroup_residual(g, th, a, b, lv, config, t_min=t_min)
                for lv in _levels(grid, 4)]
        order_check(report, s, f"{name}: Psi_{a:g} * Psi_{b:g} = Psi_{a + b:g}", errs,
                    T["semigroup.order"], note=f"integrated form, t >= {t_min:g}")
    if _is_classical(g, th) and grid.t_end == 1.0:
        res = semigroup_residual(g, th, 0.5, 0.5, Grid(1.0, 256), config)
        report.add(s, f"{name}: Psi_0.5 * Psi_0.5 = 1 at N=256", res,
                   T["semigroup.classical_abs_n256"])
    # the rectangle operators are lower-triangular Toeplitz, so they commute
    x = GridFunction.from_callable(grid, np.sin)
    rect = QuadratureScheme.RectangleLeft
    ab = fractional_integral(g, th, 0.3, fractional_integral(g, th, 0.6, x, rect,
                                                             config=config), rect, config=config)
    ba = fractional_integral(g, th, 0.6, fractional_integral(g, th, 0.3, x, rect,
                                                             config=config), rect, config=config)
    report.add(s, f"{name}: I^0.3 I^0.6 = I^0.6 I^0.3", np.max(np.abs(ab.values - ba.values)),
               T["semigroup.commutativity"])
    return report


def suite_inverse(name, g, th, grid, config):
    report = VerificationReport()
    s = "inverse-relations"
    for a in (0.3, 0.7):
        e1, e2 = [], []
        for lv in _levels(grid):
            x = GridFunction.from_callable(lv, np.sin)
            y = fractional_integral(g, th, a, x, config=config)
            d = rl_derivative(g, th, a, y, config=config)
            e1.append(np.max(np.abs(d.values - x.values)[1:-1]))
            c = caputo_derivative(g, th, a, x, config=config)
            z = fractional_integral(g, th, a, c, config=config)
            e2.append(np.max(np.abs(z.values - (x.values - x.values[0]))[1:-1]))
        order_check(report, s, f"{name}: D^{a:g} I^{a:g} x = x", e1,
                    T["inverse-relations.order"], "x = sin")
        order_check(report, s, f"{name}: I^{a:g} cD^{a:g} x = x - x(0)", e2,
                    T["inverse-relations.order"], "x = sin")
    return report


def _rel(diff: np.ndarray, ref: np.ndarray) -> float:
    mask = np.isfinite(diff)
    return float(np.max(np.abs(diff[mask])) / max(1.0, np.max(np.abs(ref[mask]))))


def suite_linearity(name, g, th, grid, config):
    report = VerificationReport()
    s = "linearity"
    x = GridFunction.from_callable(grid, np.sin)
    y = GridFunction.from_callable(grid, lambda t: t ** 2 - np.exp(-t))
    a, b = 1.7, -0.6
    combo = a * x + b * y
    ops = {
        "I^0.4": lambda u: fractional_integral(g, th, 0.4, u, config=config),
        "D^0.4": lambda u: rl_derivative(g, th, 0.4, u, config=config),
        "cD^0.4": lambda u: caputo_derivative(g, th, 0.4, u, config=config),
    }
    for label, op in ops.items():
        lhs = op(combo).values
        rhs = a * op(x).values + b * op(y).values
        report.add(s, f"{name}: {label} linear", _rel(lhs - rhs, lhs), T["linearity.rel"])
    # product rule in integral form: cD(xy) from supplied (xy)' samples
    dx = GridFunction.from_callable(grid, np.cos)
    dy = GridFunction.from_callable(grid, lambda t: 2 * t + np.exp(-t))
    xy = GridFunction(grid, x.values * y.values)
    dxy = GridFunction(grid, dx.values * y.values + x.values * dy.values)
    lhs = caputo_derivative(g, th, 0.4, xy, deriv_mode=DerivMode.Supplied, dx=dxy,
                            config=config).values
    rhs = (fractional_integral(g, th, 0.6, GridFunction(grid, dx.values * y.values),
                               config=config).values
           + fractional_integral(g, th, 0.6, GridFunction(grid, x.values * dy.values),
                                 config=config).values)
    report.add(s, f"{name}: product rule (integral form)", _rel(lhs - rhs, lhs),
               T["linearity.rel"])
    return report


def suite_constants(name, g, th, grid, config):
    report = VerificationReport()
    s = "constants"
    c = GridFunction(grid, np.full(grid.n_steps + 1, 3.7))
    for mode in (DerivMode.FiniteDifference, DerivMode.CellSlopes):
        for side in (Side.Left, Side.Right):
            d = caputo_derivative(g, th, 0.5, c, side, mode, config=config)
            report.add(s, f"{name}: cD^0.5 3.7 = 0 ({mode.value}, {side.value})",
                       np.max(np.abs(d.values)), T["constants.abs"])
    p = caputo_polynomial(g, th, 0.5, [(0, 3.7)], 0.0, grid, config)
    report.add(s, f"{name}: polynomial P = a0", np.max(np.abs(p.values)), T["constants.abs"])
    return report


def suite_power(name, g, th, grid, config):
    report = VerificationReport()
    s = "power-formulas"
    classical = _is_classical(g, th)
    for b in (1, 2, 3):
        for a in (0.3, 0.5, 0.7):
            label = f"{name}: cD^{a:g} t^{b}"
            if classical:
                exact = gamma(b + 1) / gamma(b + 1 - a) * grid.nodes ** (b - a)
                cf = caputo_polynomial(g, th, a, [(b, 1.0)], 0.0, grid, config)
                report.add(s, label + " closed form", np.max(np.abs(cf.values - exact)),
                           T["power-formulas.closed_abs"])
                errs = []
                for lv in _levels(grid):
                    ex = gamma(b + 1) / gamma(b + 1 - a) * lv.nodes ** (b - a)
                    nu = caputo_polynomial(g, th, a, [(b, 1.0)], 0.0, lv, config,
                                           closed_form=False)
                    errs.append(np.max(np.abs(nu.values - ex)))
                order_check(report, s, label + " numeric path", errs,
                            T["power-formulas.order"])
            else:
                # self-convergence at the coarse nodes
                levels = _levels(grid, 4)
                vals = [caputo_polynomial(g, th, a, [(b, 1.0)], 0.0, lv, config).values
                        for lv in levels]
                errs = [np.max(np.abs(fine[::2] - coarse))
                        for coarse, fine in zip(vals[:-1], vals[1:])]
                order_check(report, s, label + " numeric path (self-convergence)", errs,
                            T["power-formulas.order"])
    return report


def suite_laplace(name, g, th, grid, config):
    report = VerificationReport()
    s = "laplace-reduction"
    lg = Grid(T["laplace-reduction.t_end"], T["laplace-reduction.n_steps"])
    ps = np.array([0.5, 1.0, 1.5, 2.0, 3.0, 5.0])
    x = GridFunction.from_callable(lg, np.sin)
    for a in (0.3, 0.5, 0.7):
        y = fractional_integral(g, th, a, x, config=config)
        lhs = forward_transform(y.values, lg.h, ps)
        rhs = np.real(symbol_power(g, th, a, ps.astype(complex))) * \
            forward_transform(x.values, lg.h, ps)
        rel = float(np.max(np.abs(lhs / rhs - 1.0)))
        report.add(s, f"{name}: L(I^{a:g} sin) = Phi^-{a:g} L(sin)", rel,
                   T["laplace-reduction.rel"], note="max over p in {0.5,1,1.5,2,3,5}")
    return report


def suite_ml_reduction(name, g, th, grid, config):
    report = VerificationReport()
    s = "ml-reduction"
    if not _is_classical(g, th):
        _not_applicable(report, s, f"{name}: E_Phi = E_alpha(lambda t^alpha)",
                        "the reduction concerns Phi = p")
        return report
    rg = Grid(2.0, 400)
    mask = rg.nodes >= 0.05
    for a in (0.3, 0.5, 0.8):
        for lam in (-1.0, -0.25):
            e = ml_dynamic(MLQuery(g, th, a, lam, rg, config))
            ref = np.array([ml_classical(a, lam * t ** a) for t in rg.nodes[mask]])
            report.add(s, f"{name}: alpha={a:g} lambda={lam:g}",
                       np.max(np.abs(e.values[mask] - ref)), T["ml-reduction.abs"],
                       note="t in [0.05, 2]")
    return report


def suite_ml_eigen(name, g, th, grid, config):
    report = VerificationReport()
    s = "ml-eigen"
    for a in (0.5, 1.0):
        label = f"{name}: cD^{a:g} E = lambda E, lambda=-1"
        probe = MLQuery(g, th, a, -1.0, grid, config)
        if ml_initial_value(probe) is None:
            _not_applicable(report, s, label, "E(0+) is infinite for this generator")
            continue
        errs = [ml_eigen_residual(MLQuery(g, th, a, -1.0, lv, config))
                for lv in _levels(grid)]
        order_check(report, s, label, errs, T["ml-eigen.order"], "t >= T/10, cell slopes")
    return report


def suite_ibp(name, g, th, grid, config):
    report = VerificationReport()
    s = "ibp"
    c = GridFunction(grid, np.full(grid.n_steps + 1, 2.0))
    y = GridFunction.from_callable(grid, np.cos)
    report.add(s, f"{name}: constant x", ibp_residual(g, th, 0.5, c, y, config=config),
               T["ibp.constant_abs"])
    for a, xf, dxf, yf, label in (
        (0.5, lambda t: t, lambda t: 1.0 + 0 * t, lambda t: 1.0 + 0 * t, "x=t, y=1"),
        (0.3, lambda t: t ** 2, lambda t: 2 * t, lambda t: t, "x=t^2, y=t"),
    ):
        errs = []
        for lv in _levels(grid):
            errs.append(ibp_residual(g, th, a, GridFunction.from_callable(lv, xf),
                                     GridFunction.from_callable(lv, yf),
                                     GridFunction.from_callable(lv, dxf), config))
        order_check(report, s, f"{name}: alpha={a:g} {label}", errs, T["ibp.order"])
    return report


def suite_taylor(name, g, th, grid, config):
    report = VerificationReport()
    s = "taylor"
    for a in (0.3, 0.5):
        errs = []
        for lv in _levels(grid):
            x = GridFunction.from_callable(lv, lambda t: 1.0 + t ** 2)
            dx = GridFunction.from_callable(lv, lambda t: 2 * t)
            d = caputo_derivative(g, th, a, x, deriv_mode=DerivMode.Supplied, dx=dx,
                                  config=config)
            rec = taylor_reconstruct(g, th, a, 1.0, d, config)
            errs.append(np.max(np.abs(rec.values - x.values)))
        order_check(report, s, f"{name}: x(0) + I^{a:g} cD^{a:g} x = x", errs,
                    T["taylor.order"], "x = 1 + t^2")
    return report


def suite_limits(name, g, th, grid, config):
    report = VerificationReport()
    s = "limits"
    lg = Grid(1.0, T["limits.n_steps"])
    x = GridFunction.from_callable(lg, lambda t: t ** 2)
    dx = GridFunction.from_callable(lg, lambda t: 2 * t)
    up = [np.max(np.abs(caputo_derivative(g, th, a, x, deriv_mode=DerivMode.Supplied,
                                          dx=dx, config=config).values - dx.values))
          for a in (0.9, 0.95, 0.99)]
    report.add(s, f"{name}: cD^alpha t^2 -> 2t as alpha -> 1", up[-1], up[0],
               passed=bool(up[0] > up[1] > up[2]),
               note="alpha in {0.9,0.95,0.99}; errors=" + ",".join(f"{e:.3e}" for e in up))
    x = GridFunction.from_callable(lg, np.sin)
    down = [np.max(np.abs(fractional_integral(g, th, a, x, config=config).values - x.values))
            for a in (0.1, 0.05, 0.01)]
    report.add(s, f"{name}: I^alpha sin -> sin as alpha -> 0", down[-1], down[0],
               passed=bool(down[0] > down[1] > down[2]),
               note="alpha in {0.1,0.05,0.01}; errors=" + ",".join(f"{e:.3e}" for e in down))
    return report


def _sign_probe(samples: np.ndarray, max_order: int) -> float:
    tol = 1e-10 * max(1.0, float(np.max(np.abs(samples))))
    worst = math.inf
    diffs = samples
    for n in range(max_order + 1):
        worst = min(worst, float(np.min((-1) ** n * diffs)) + tol)
        diffs = np.diff(diffs)
    return worst


def suite_monotonicity(name, g, th, grid, config):
    report = VerificationReport()
    s = "monotonicity"
    kern = make_kernel(g, th, 0.5, config)
    for c in monotonicity_probe(kern, grid, 3).checks:
        report.add(s, f"{name}: Psi_0.5 {c.name}", c.measured, c.threshold, c.passed, c.note)
    x = GridFunction.from_callable(grid, lambda t: t + np.sin(t) ** 2)
    tol = T["monotonicity.first_order_factor"] * grid.h
    for a in (0.3, 0.7):
        d = caputo_derivative(g, th, a, x, config=config)
        worst = float(np.min(d.values[d.defined_mask]))
        report.add(s, f"{name}: cD^{a:g} of nondecreasing x >= 0", -worst, tol,
                   note="measured = -min output; x = t + sin(t)^2")
    if _is_classical(g, th):
        for a in (0.3, 0.5, 0.8):
            e = ml_dynamic(MLQuery(g, th, a, -1.0, grid, config))
            worst = _sign_probe(e.values[1:], 2)
            report.add(s, f"{name}: E_{a:g}(-t^{a:g}) completely monotone (order <= 2)",
                       -worst, 0.0, passed=worst >= 0,
                       note="measured = -min signed difference")
    return report


def suite_langevin(name, g, th, grid, config):
    report = VerificationReport()
    s = "langevin-manufactured"
    zero = LangevinProblem(0.5, 0.5, g, th, grid.t_end, [1.3, -0.4])
    known = GridFunction(grid, np.tile([1.3, -0.4], (grid.n_steps + 1, 1)))
    report.add(s, f"{name}: zero problem stays at x0",
               manufactured_residual(zero, known, SolverOptions(grid.n_steps, inversion=config)),
               T["langevin.zero_abs"])
    for a, b in ((0.5, 0.5), (0.3, 0.4)):
        if _is_classical(g, th) and a + b == 1.0:
            forcing = lambda t, u, v: np.ones_like(u)
            label = "F = 1"
        else:
            forcing = integral_form_forcing(g, th, a + b, 1, config)
            label = "F = L^-1(Phi^(a+b)/p^2)"
        problem = LangevinProblem(a, b, g, th, grid.t_end, [0.0], F=forcing)
        errs = []
        for lv in _levels(grid):
            exact = GridFunction(lv, lv.nodes)
            errs.append(manufactured_residual(problem, exact,
                                              SolverOptions(lv.n_steps, inversion=config)))
        order_check(report, s, f"{name}: alpha={a:g} beta={b:g} x*=t, {label}", errs,
                    T["langevin.order"])
    return report


def suite_uniqueness(name, g, th, grid, config):
    report = VerificationReport()
    s = "uniqueness-condition"
    zero = LangevinProblem(0.5, 0.5, g, th, grid.t_end, [1.0])
    for c in check_uniqueness_condition(zero, 0.0, config).checks:
        report.add(s, f"{name}: zero problem {c.name}", c.measured, c.threshold, c.passed,
                   c.note)
    if _is_classical(g, th):
        for t_end, expected in ((1.0, 1.0), (0.5, 0.5)):
            p = LangevinProblem(0.5, 0.5, g, th, t_end, [1.0], A=[[-1.0]])
            c = check_uniqueness_condition(p, 0.0, config).checks[0]
            report.add(s, f"{name}: |A|=1 T={t_end:g} left side = {expected:g}",
                       abs(c.measured - expected), T["uniqueness.boundary_abs"],
                       note=f"contraction {'holds' if c.passed else 'fails'}")
    return report


SUITES: dict[str, Suite] = {
    "admissibility": suite_admissibility,
    "semigroup": suite_semigroup,
    "inverse-relations": suite_inverse,
    "linearity": suite_linearity,
    "constants": suite_constants,
    "power-formulas": suite_power,
    "laplace-reduction": suite_laplace,
    "ml-reduction": suite_ml_reduction,
    "ml-eigen": suite_ml_eigen,
    "ibp": suite_ibp,
    "taylor": suite_taylor,
    "limits": suite_limits,
    "monotonicity": suite_monotonicity,
    "langevin-manufactured": suite_langevin,
    "uniqueness-condition": suite_uniqueness,
}


def preset_from_name(text: str) -> GeneratorPreset:
    """Preset family name, or any other text as a custom generator expression."""
    try:
        kind = PresetKind(text)
    except ValueError:
        return GeneratorPreset(PresetKind.Custom, text=text)
    return GeneratorPreset(kind)


def _run_one(preset: GeneratorPreset, suite: str, grid: Grid,
             config: InversionConfig) -> VerificationReport:
    label = preset.name if preset.kind is not PresetKind.Custom else preset.text
    try:
        g, th = make_preset(preset)
        return SUITES[suite](label, g, th, grid, config)
    except Exception as exc:  # a crashing suite is a failed check, never a silent pass
        report = VerificationReport()
        report.add(suite, f"{label}: suite raised", math.nan, math.nan, False,
                   f"{type(exc).__name__}: {exc}")
        return report


def run_verify(generators: Iterable[GeneratorPreset], selection: Iterable[str],
               grid: Grid = Grid(1.0, 256), config: InversionConfig = TALBOT,
               threads: int | None = None) -> VerificationReport:
    """Run every selected suite for every preset; checks come back sorted."""
    suites = sorted(set(selection))
    if not suites:
        raise ValueError("suite selection is empty")
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites: {sorted(unknown)}")
    presets = list(generators)
    jobs = [(p, s) for s in suites for p in presets]
    threads = thread_count() if threads is None else threads
    if threads > 0:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _run_one(job[0], job[1], grid, config), jobs))
    else:
        parts = [_run_one(p, s, grid, config) for p, s in jobs]
    report = VerificationReport()
    for part in parts:
        report.extend(part)
    return report.sorted()
