"""Acceptance criteria 1-13, one test each, at the required tolerances."""

import math
import time

import numpy as np
import pytest
from scipy.special import gamma

from dynmem.generators import ParamSet, make_preset, parse_generator
from dynmem.grid import Grid, GridFunction
from dynmem.kernels import admissibility_check, kernel_eval, make_kernel, semigroup_residual
from dynmem.langevin import (
    LangevinProblem,
    SolverOptions,
    check_uniqueness_condition,
    manufactured_residual,
)
from dynmem.laplace import forward_transform
from dynmem.mittag_leffler import MLQuery, ml_classical, ml_dynamic, ml_eigen_residual
from dynmem.operators import (
    DerivMode,
    caputo_derivative,
    caputo_polynomial,
    fractional_integral,
    rl_derivative,
)
from dynmem.generators import symbol_power
from dynmem.report import observed_order

PRESETS4 = ("classical", "tempered", "affine", "hybrid")


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def _min_order(errors):
    # errors already at roundoff carry no order information and count as converged
    if max(errors) <= 1e-10:
        return math.inf
    return min(observed_order(errors))


def _finish(failures, budget):
    assert budget.elapsed < budget.seconds, f"runtime {budget.elapsed:.2f}s > {budget.seconds}s"
    assert not failures, "\n".join(failures)


def test_criterion_01_classical_kernel_oracle():
    failures = []
    g, th = make_preset("classical")
    t = np.array([0.1, 1.0, 5.0])
    with Budget(1.0) as b:
        for a in (0.25, 0.5, 0.75, 1.25):
            got = kernel_eval(make_kernel(g, th, a), t)
            rel = np.max(np.abs(got / (t ** (a - 1) / gamma(a)) - 1))
            if not rel <= 1e-8:
                failures.append(f"alpha={a}: rel {rel:.2e}")
    _finish(failures, b)


def test_criterion_02_tempered_kernel_oracle():
    failures = []
    t = np.array([0.1, 1.0, 5.0])
    with Budget(1.0) as b:
        for lam in (0.5, 1.0):
            g, th = make_preset("tempered")
            th = ParamSet({"lambda": lam})
            for a in (0.25, 0.5, 0.75, 1.25):
                got = kernel_eval(make_kernel(g, th, a), t)
                exact = np.exp(-lam * t) * t ** (a - 1) / gamma(a)
                rel = np.max(np.abs(got / exact - 1))
                if not rel <= 1e-8:
                    failures.append(f"lambda={lam} alpha={a}: rel {rel:.2e}")
    _finish(failures, b)


def test_criterion_03_semigroup():
    failures = []
    levels = (128, 256, 512, 1024)
    with Budget(30.0) as b:
        for name in PRESETS4:
            g, th = make_preset(name)
            for a, c in ((0.5, 0.5), (0.3, 0.6)):
                errs = [semigroup_residual(g, th, a, c, Grid(1.0, n), t_min=0.1)
                        for n in levels]
                order = _min_order(errs)
                if not order >= 0.9:
                    failures.append(f"{name} ({a},{c}): order {order:.2f} errors {errs}")
        g, th = make_preset("classical")
        res = semigroup_residual(g, th, 0.5, 0.5, Grid(1.0, 256))
        if not res <= 0.02:
            failures.append(f"classical N=256 residual against 1: {res:.3e}")
    _finish(failures, b)


def test_criterion_04_inverse_relations():
    failures = []
    with Budget(30.0) as b:
        for name in ("classical", "tempered"):
            g, th = make_preset(name)
            for a in (0.3, 0.7):
                e1, e2 = [], []
                for n in (128, 256, 512):
                    x = GridFunction.from_callable(Grid(1.0, n), np.sin)
                    d = rl_derivative(g, th, a, fractional_integral(g, th, a, x))
                    e1.append(np.max(np.abs(d.values - x.values)[1:-1]))
                    z = fractional_integral(g, th, a, caputo_derivative(g, th, a, x))
                    e2.append(np.max(np.abs(z.values - (x.values - x.values[0]))[1:-1]))
                for label, errs in (("D I x = x", e1), ("I cD x = x - x(0)", e2)):
                    order = _min_order(errs)
                    if not order >= 0.8:
                        failures.append(f"{name} alpha={a} {label}: order {order:.2f}, "
                                        f"errors {[f'{e:.3e}' for e in errs]}")
    _finish(failures, b)


def test_criterion_05_power_formula():
    failures = []
    g, th = make_preset("classical")
    with Budget(10.0) as b:
        for p in (1, 2, 3):
            for a in (0.3, 0.5, 0.7):
                exact = lambda t: gamma(p + 1) / gamma(p + 1 - a) * t ** (p - a)
                grid = Grid(1.0, 256)
                cf = caputo_polynomial(g, th, a, [(p, 1.0)], 0.0, grid)
                err = np.max(np.abs(cf.values - exact(grid.nodes)))
                if not err <= 1e-12:
                    failures.append(f"closed form b={p} alpha={a}: {err:.2e}")
                errs = []
                for n in (128, 256, 512):
                    lv = Grid(1.0, n)
                    nu = caputo_polynomial(g, th, a, [(p, 1.0)], 0.0, lv, closed_form=False)
                    errs.append(np.max(np.abs(nu.values - exact(lv.nodes))))
                order = _min_order(errs)
                if not order >= 0.8:
                    failures.append(f"numeric b={p} alpha={a}: order {order:.2f}")
    _finish(failures, b)


def test_criterion_06_derivative_of_constants():
    failures = []
    grid = Grid(1.0, 128)
    c = GridFunction(grid, np.full(129, 3.7))
    with Budget(1.0) as b:
        for name in PRESETS4 + ("power-scaled",):
            g, th = make_preset(name)
            for a in (0.3, 0.7):
                d = caputo_derivative(g, th, a, c)
                err = np.max(np.abs(d.values))
                poly = np.max(np.abs(caputo_polynomial(g, th, a, [(0, 3.7)], 0.0, grid).values))
                if not max(err, poly) <= 1e-12:
                    failures.append(f"{name} alpha={a}: {max(err, poly):.2e}")
    _finish(failures, b)


def test_criterion_07_ml_reduction():
    failures = []
    g, th = make_preset("classical")
    grid = Grid(2.0, 200)
    mask = grid.nodes >= 0.05
    with Budget(10.0) as b:
        for a in (0.3, 0.5, 0.8):
            for lam in (-1.0, -0.25):
                e = ml_dynamic(MLQuery(g, th, a, lam, grid))
                ref = np.array([ml_classical(a, lam * t ** a) for t in grid.nodes[mask]])
                err = np.max(np.abs(e.values[mask] - ref))
                if not err <= 1e-6:
                    failures.append(f"alpha={a} lambda={lam}: {err:.2e}")
    _finish(failures, b)


def test_criterion_08_ml_eigenfunction():
    failures = []
    with Budget(20.0) as b:
        for name in ("classical", "tempered"):
            g, th = make_preset(name)
            for a in (0.5, 0.8):
                errs = [ml_eigen_residual(MLQuery(g, th, a, -1.0, Grid(1.0, n)))
                        for n in (128, 256, 512)]
                order = _min_order(errs)
                if not order >= 0.8:
                    failures.append(f"{name} alpha={a}: order {order:.2f}, "
                                    f"residuals {[f'{e:.3e}' for e in errs]}")
    _finish(failures, b)


def test_criterion_09_laplace_symbol_identity():
    failures = []
    grid = Grid(32.0, 1024)
    ps = np.array([0.5, 1.0, 1.5, 2.0, 3.0, 5.0])
    x = GridFunction.from_callable(grid, np.sin)
    with Budget(10.0) as b:
        for name in ("classical", "tempered"):
            g, th = make_preset(name)
            for a in (0.3, 0.5, 0.7):
                y = fractional_integral(g, th, a, x)
                lhs = forward_transform(y.values, grid.h, ps)
                rhs = np.real(symbol_power(g, th, a, ps + 0j)) / (ps ** 2 + 1)
                rel = np.max(np.abs(lhs / rhs - 1))
                if not rel <= 1e-3:
                    failures.append(f"{name} alpha={a}: rel {rel:.2e}")
    _finish(failures, b)


def test_criterion_10_alpha_limits():
    failures = []
    g, th = make_preset("classical")
    grid = Grid(1.0, 2048)
    with Budget(10.0) as b:
        x = GridFunction.from_callable(grid, lambda t: t ** 2)
        up = [np.max(np.abs(caputo_derivative(g, th, a, x).values - 2 * grid.nodes))
              for a in (0.9, 0.95, 0.99)]
        if not up[0] > up[1] > up[2]:
            failures.append(f"cD^alpha t^2 -> 2t not monotone: {up}")
        s = GridFunction.from_callable(grid, np.sin)
        down = [np.max(np.abs(fractional_integral(g, th, a, s).values - s.values))
                for a in (0.1, 0.05, 0.01)]
        if not down[0] > down[1] > down[2]:
            failures.append(f"I^alpha sin -> sin not monotone: {down}")
    _finish(failures, b)


def test_criterion_11_langevin_manufactured():
    failures = []
    g, th = make_preset("classical")
    with Budget(30.0) as b:
        problem = LangevinProblem(0.5, 0.5, g, th, 1.0, [0.0],
                                  F=lambda t, u, v: np.ones_like(u))
        errs = []
        for n in (256, 512, 1024):
            grid = Grid(1.0, n)
            errs.append(manufactured_residual(problem, GridFunction(grid, grid.nodes),
                                              SolverOptions(n)))
        if not errs[0] <= 0.05:
            failures.append(f"N=256 error {errs[0]:.3e}")
        order = _min_order(errs)
        if not order >= 0.8:
            failures.append(f"order {order:.2f}, errors {errs}")
        zero = LangevinProblem(0.5, 0.5, g, th, 1.0, [1.0, -2.0])
        grid = Grid(1.0, 256)
        err = manufactured_residual(zero, GridFunction(grid, np.tile([1.0, -2.0], (257, 1))),
                                    SolverOptions(256))
        if not err <= 1e-14:
            failures.append(f"zero problem error {err:.2e}")
    _finish(failures, b)


def test_criterion_12_uniqueness_boundary():
    g, th = make_preset("classical")
    with Budget(1.0) as b:
        problem = LangevinProblem(0.5, 0.5, g, th, 1.0, [1.0], A=[[-1.0]])
        check = check_uniqueness_condition(problem, 0.0).checks[0]
    failures = [] if abs(check.measured - 1.0) <= 1e-10 else [f"left side {check.measured!r}"]
    _finish(failures, b)


def test_criterion_13_admissibility_gate():
    failures = []
    grid = Grid(1.0, 128)
    with Budget(20.0) as b:
        for name in PRESETS4:
            g, th = make_preset(name)
            rep = admissibility_check(g, th, (0.3, 0.5, 0.7), grid)
            failures += [f"{name}: {c.name} measured {c.measured:.3e}"
                         for c in rep.failures()]
        rep = admissibility_check(parse_generator("p - 2"), ParamSet(), (0.5,), grid)
        a1 = [c for c in rep.checks if c.name.startswith("A1")]
        if not a1 or a1[0].passed:
            failures.append("p - 2 was not rejected by A1")
    _finish(failures, b)
