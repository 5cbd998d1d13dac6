"""Predictor-corrector solver for the nonlinear dynamic-memory Langevin system.

The differential system is marched through its Volterra integral form

    x(t) = x0 - I^beta(lambda x)(t) + I^(alpha+beta) G(t) + v(t),
    G(s) = A x(s) + B x(sigma(s)) + F(s, x(s), x(sigma(s))),

with ``v`` the initial-velocity contribution. Every history sum uses
product-integration weights from the cumulative kernels: the predictor
freezes the integrands on each cell (rectangle weights) and the corrector
integrates their piecewise-linear interpolant (trapezoid weights), with the
unknown value at the new node replaced by the latest iterate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from dynmem.generators import GeneratorExpr, ParamSet, eval_generator, leading_term
from dynmem.grid import Grid, GridFunction
from dynmem.kernels import cell_weights, kernel_eval, make_kernel, monotonicity_probe
from dynmem.laplace import InversionConfig, TALBOT, invert
from dynmem.report import VerificationReport

__all__ = [
    "VelocityTermMode",
    "LangevinProblem",
    "SolverOptions",
    "Trajectory",
    "DivergenceError",
    "solve",
    "check_uniqueness_condition",
    "manufactured_residual",
    "integral_form_forcing",
]

Forcing = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


class DivergenceError(ArithmeticError):
    def __init__(self, step: int, message: str = "") -> None:
        super().__init__(message or f"non-finite state at step {step}")
        self.step = step


class VelocityTermMode(enum.Enum):
    PaperLiteral = "paper-literal"
    CumulativeConsistent = "cumulative-consistent"


def _zero_forcing(t, u, v):
    return np.zeros_like(u)


def _constant(value: float) -> Callable:
    return lambda t, value=value: value + 0.0 * np.asarray(t, dtype=float)


def _identity(t):
    return t


@dataclass(frozen=True)
class LangevinProblem:
    alpha: float
    beta: float
    generator: GeneratorExpr
    theta: ParamSet
    t_end: float
    x0: np.ndarray
    x1: np.ndarray | None = None
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    damping: Callable = field(default_factory=lambda: _constant(0.0))
    sigma: Callable = _identity
    F: Forcing = _zero_forcing

    def __post_init__(self) -> None:
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ValueError("alpha and beta must lie in (0, 1)")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError("t_end must be positive and finite")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        d = x0.size
        x1 = np.zeros(d) if self.x1 is None else np.atleast_1d(np.asarray(self.x1, dtype=float))
        a = np.zeros((d, d)) if self.A is None else np.asarray(self.A, dtype=float).reshape(d, d)
        b = np.zeros((d, d)) if self.B is None else np.asarray(self.B, dtype=float).reshape(d, d)
        if x1.shape != (d,):
            raise ValueError("x0 and x1 must have the same dimension")
        for name, arr in (("x0", x0), ("x1", x1), ("A", a), ("B", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @property
    def dim(self) -> int:
        return self.x0.size


@dataclass(frozen=True)
class SolverOptions:
    n_steps: int = 256
    corrector_iterations: int = 1
    velocity_term_mode: VelocityTermMode = VelocityTermMode.CumulativeConsistent
    inversion: InversionConfig = TALBOT

    def __post_init__(self) -> None:
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError("n_steps must be an integer >= 2")
        if int(self.corrector_iterations) != self.corrector_iterations \
                or self.corrector_iterations < 1:
            raise ValueError("corrector_iterations must be an integer >= 1")
        object.__setattr__(self, "velocity_term_mode",
                           VelocityTermMode(self.velocity_term_mode))


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: Grid
    states: np.ndarray
    corrector_deltas: np.ndarray  # (n_steps, corrector_iterations)

    def component(self, i: int = 0) -> GridFunction:
        return GridFunction(self.grid, self.states[:, i])


def _velocity(problem: LangevinProblem, options: SolverOptions, t: np.ndarray) -> np.ndarray:
    kernel = make_kernel(problem.generator, problem.theta, problem.beta, options.inversion)
    out = np.zeros((t.size, problem.dim))
    if not np.any(problem.x1):
        return out
    level = 1 if options.velocity_term_mode is VelocityTermMode.CumulativeConsistent else 0
    # node 0 is pinned to x0, so the singular Psi_beta(0) is never read
    out[1:] = np.outer(kernel_eval(kernel, t[1:], level), problem.x1)
    return out


def _sigma_nodes(problem: LangevinProblem, grid: Grid) -> np.ndarray:
    t = grid.nodes
    s = np.asarray(problem.sigma(t), dtype=float) * np.ones_like(t)
    if not np.all(np.isfinite(s)):
        raise ValueError("sigma must be finite")
    slack = 1e-12 * grid.t_end
    if np.any(s < -slack) or np.any(s > grid.t_end + slack):
        raise ValueError("sigma must map [0, T] into [0, T]")
    if np.any(s > t + slack):
        j = int(np.argmax(s > t + slack))
        raise ValueError(f"sigma(t) > t at node {j}: future dependence is not supported")
    return np.clip(s, 0.0, t)


def solve(problem: LangevinProblem, options: SolverOptions = SolverOptions()) -> Trajectory:
    grid = Grid(problem.t_end, options.n_steps)
    n, h, d = grid.n_steps, grid.h, problem.dim
    t = grid.nodes
    kb = make_kernel(problem.generator, problem.theta, problem.beta, options.inversion)
    kab = make_kernel(problem.generator, problem.theta, problem.alpha + problem.beta,
                      options.inversion)
    a_b, b_b = cell_weights(kb, n, h)
    a_ab, b_ab = cell_weights(kab, n, h)
    # trapezoid weight of f_j seen from node m is (A-B)[m-j] + B[m-j+1] for 0<j<m
    c_b = np.zeros(n + 1)
    c_ab = np.zeros(n + 1)
    c_b[1:n] = (a_b - b_b)[1:n] + b_b[2:]
    c_ab[1:n] = (a_ab - b_ab)[1:n] + b_ab[2:]

    lam = np.asarray(problem.damping(t), dtype=float) * np.ones_like(t)
    if not np.all(np.isfinite(lam)):
        raise ValueError("damping must be finite on the grid")
    sig = _sigma_nodes(problem, grid) / h
    velocity = _velocity(problem, options, t)

    x = np.zeros((n + 1, d))
    lx = np.zeros((n + 1, d))
    g = np.zeros((n + 1, d))
    deltas = np.zeros((n, options.corrector_iterations))
    x[0] = problem.x0

    def delayed(j: int, current: np.ndarray) -> np.ndarray:
        s = sig[j]
        i = min(int(math.floor(s)), j)
        w = s - i
        left = current if i == j else x[i]
        if w == 0.0:
            return left
        right = current if i + 1 == j else x[i + 1]
        return (1.0 - w) * left + w * right

    def rhs(j: int, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xs = delayed(j, state)
        forcing = np.asarray(problem.F(t[j], state, xs), dtype=float) * np.ones(d)
        return lam[j] * state, problem.A @ state + problem.B @ xs + forcing

    # overflow in a diverging march is reported as DivergenceError, not warnings
    with np.errstate(over="ignore", invalid="ignore"):
        lx[0], g[0] = rhs(0, x[0])
        for m in range(1, n + 1):
            base = problem.x0 + velocity[m]
            # rectangle predictor over cells [t_j, t_{j+1}], j < m
            pred = (base - a_b[m:0:-1] @ lx[:m] + a_ab[m:0:-1] @ g[:m])
            # trapezoid history without the new node
            hist = (base - (a_b[m] - b_b[m]) * lx[0] + (a_ab[m] - b_ab[m]) * g[0]
                    - c_b[m - 1:0:-1] @ lx[1:m] + c_ab[m - 1:0:-1] @ g[1:m])
            current = pred
            for k in range(options.corrector_iterations):
                lx_m, g_m = rhs(m, current)
                new = hist - b_b[1] * lx_m + b_ab[1] * g_m
                deltas[m - 1, k] = float(np.max(np.abs(new - current)))
                current = new
            if not np.all(np.isfinite(current)):
                raise DivergenceError(m)
            x[m] = current
            lx[m], g[m] = rhs(m, current)
            if not (np.all(np.isfinite(lx[m])) and np.all(np.isfinite(g[m]))):
                raise DivergenceError(m)
    x.setflags(write=False)
    return Trajectory(grid, x, deltas)


def check_uniqueness_condition(problem: LangevinProblem, lipschitz: float,
                               config: InversionConfig = TALBOT,
                               probe_steps: int = 256) -> VerificationReport:
    """Contraction test ``|I^(a+b)| (|A| + |B| + L) + |I^b| |lambda| < 1``.

    Operator norms are replaced by ``K_1(T)`` of the kernel (its L1 norm on
    ``[0, T]`` when the kernel is nonnegative), matrix norms are spectral,
    and the damping norm is its maximum modulus on the grid.
    """
    if not lipschitz >= 0:
        raise ValueError("Lipschitz constant must be non-negative")
    suite = "uniqueness-condition"
    report = VerificationReport()
    grid = Grid(problem.t_end, probe_steps)
    kb = make_kernel(problem.generator, problem.theta, problem.beta, config)
    kab = make_kernel(problem.generator, problem.theta, problem.alpha + problem.beta, config)
    valid = True
    for k in (kb, kab):
        sign = monotonicity_probe(k, grid, max_order=0)
        valid &= sign.overall
    norm_b = float(kernel_eval(kb, problem.t_end, 1))
    norm_ab = float(kernel_eval(kab, problem.t_end, 1))
    lam = float(np.max(np.abs(np.asarray(problem.damping(grid.nodes), dtype=float))))
    mat = np.linalg.norm(problem.A, 2) + np.linalg.norm(problem.B, 2)
    lhs = norm_ab * (mat + lipschitz) + norm_b * lam
    note = "" if valid else "norm surrogate invalid: kernel changes sign"
    report.add(suite, "contraction left side < 1", lhs, 1.0,
               passed=valid and lhs < 1.0, note=note)
    return report


def manufactured_residual(problem: LangevinProblem, known_solution: GridFunction,
                          options: SolverOptions = SolverOptions()) -> float:
    """Max over nodes of ``|solve(problem) - known_solution|`` (max norm in space)."""
    traj = solve(problem, options)
    if known_solution.grid != traj.grid:
        raise ValueError("known solution lives on a different grid")
    ref = known_solution.values.reshape(traj.states.shape[0], -1)
    return float(np.max(np.abs(traj.states - ref)))


def integral_form_forcing(generator: GeneratorExpr, theta: ParamSet, order: float,
                          degree: int = 1, config: InversionConfig = TALBOT) -> Callable:
    """Forcing ``f`` with ``I^order f = t^degree`` for any generator.

    ``f`` is the original of ``degree! Phi(p)^order / p^(degree+1)``. Used as
    a manufactured right-hand side for the integral form with ``A = B = 0``,
    zero damping and zero initial data, whose exact solution is ``t^degree``.
    """
    if degree < 0 or not order > 0:
        raise ValueError("need degree >= 0 and order > 0")
    scale = float(math.factorial(degree))

    def symbol(p):
        return scale * np.power(eval_generator(generator, theta, p), order) / p ** (degree + 1)

    # value at t = 0: lim p * symbol(p) with Phi ~ c p^e
    lead = leading_term(generator, theta)
    at_zero = math.nan
    if lead is not None and lead[0] > 0:
        c, e = lead
        growth = e * order - degree
        at_zero = 0.0 if growth < 0 else (scale * c ** order if growth == 0 else math.nan)

    @lru_cache(maxsize=None)
    def value(t: float) -> float:
        return at_zero if t <= 0 else invert(symbol, t, config)

    def forcing(t, u, v):
        return np.full_like(u, value(float(t)))

    return forcing
