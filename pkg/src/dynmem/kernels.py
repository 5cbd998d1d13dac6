"""Memory kernels generated by a dynamic memory generator.

The kernel of order ``alpha`` is the original of ``Phi(p)^(-alpha)``. Besides
point values (level 0) every kernel exposes its cumulative antiderivatives
``K_1`` and ``K_2`` (levels 1 and 2, symbols ``Phi^(-alpha) p^(-m)``), which is
all the product-integration weights ever read: singular kernels are never
sampled at ``t = 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma, gammainc

from dynmem.generators import (
    GeneratorError,
    GeneratorExpr,
    ParamSet,
    affine_coefficients,
    eval_generator,
    parameter_names,
    symbol_power,
)
from dynmem.grid import Grid
from dynmem.laplace import (
    InversionConfig,
    TALBOT,
    cross_validate,
    invert,
)
from dynmem.report import VerificationReport

__all__ = [
    "Strategy",
    "Kernel",
    "make_kernel",
    "kernel_eval",
    "kernel_samples",
    "cell_weights",
    "semigroup_residual",
    "admissibility_check",
    "monotonicity_probe",
]


class Strategy(enum.Enum):
    ClosedFormClassical = "closed-form-classical"
    ClosedFormTempered = "closed-form-tempered"
    ClosedFormAffine = "closed-form-affine"
    Numeric = "numeric"


@dataclass(frozen=True)
class Kernel:
    generator: GeneratorExpr
    theta: ParamSet
    alpha: float
    strategy: Strategy
    config: InversionConfig = TALBOT
    # closed forms: scale * exp(-rate t) t^(alpha-1) / Gamma(alpha)
    scale: float = 1.0
    rate: float = 0.0

    @property
    def singular(self) -> bool:
        return self.alpha < 1.0

    def symbol(self, level: int = 0):
        """Laplace symbol of the level-``level`` cumulative kernel."""
        def fn(p):
            value = symbol_power(self.generator, self.theta, self.alpha, p)
            return value / p**level if level else value
        return fn


def make_kernel(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                config: InversionConfig = TALBOT, numeric: bool = False) -> Kernel:
    """Build the kernel of order *alpha*, picking the most specific closed form.

    ``numeric=True`` forces numerical inversion even when a closed form exists.
    """
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"kernel order must be positive and finite, got {alpha}")
    missing = parameter_names(generator) - set(theta.as_dict())
    if missing:
        raise GeneratorError(f"unbound parameters: {sorted(missing)}")
    coeffs = None if numeric else affine_coefficients(generator, theta)
    if coeffs is not None and coeffs[0] > 0 and coeffs[1] >= 0:
        a, b = coeffs
        if a == 1.0 and b == 0.0:
            strategy = Strategy.ClosedFormClassical
        elif a == 1.0:
            strategy = Strategy.ClosedFormTempered
        else:
            strategy = Strategy.ClosedFormAffine
        return Kernel(generator, theta, alpha, strategy, config,
                      scale=a ** -alpha, rate=b / a)
    return Kernel(generator, theta, alpha, Strategy.Numeric, config)


def _closed_form(kernel: Kernel, t: np.ndarray, level: int) -> np.ndarray:
    a, c, lam = kernel.alpha, kernel.scale, kernel.rate
    with np.errstate(divide="ignore", invalid="ignore"):
        if lam == 0.0:
            return c * t ** (a + level - 1) / gamma(a + level)
        x = lam * t
        if level == 0:
            return c * np.exp(-x) * t ** (a - 1) / gamma(a)
        k1 = c * lam**-a * gammainc(a, x)
        if level == 1:
            return k1
        # K2 = t K1 - int_0^t s Psi(s) ds
        return t * k1 - c * a * lam ** (-a - 1) * gammainc(a + 1, x)


def kernel_eval(kernel: Kernel, t, level: int = 0):
    """Kernel value (level 0) or its ``level``-fold antiderivative at *t*.

    ``t = 0`` is allowed for levels 1-2 (value 0) and for non-singular
    kernels at level 0.
    """
    if level not in (0, 1, 2):
        raise ValueError("level must be 0, 1 or 2")
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise ValueError("kernel arguments must be non-negative")
    zero = times == 0
    if level == 0 and kernel.singular and np.any(zero):
        raise ValueError("singular kernel is undefined at t = 0")
    out = np.zeros_like(times)
    pos = ~zero
    if np.any(pos):
        if kernel.strategy is Strategy.Numeric:
            out[pos] = invert(kernel.symbol(level), times[pos], kernel.config)
        else:
            out[pos] = _closed_form(kernel, times[pos], level)
    if level == 0 and np.any(zero):
        out[zero] = _value_at_zero(kernel)
    return float(out[0]) if scalar else out


def _value_at_zero(kernel: Kernel) -> float:
    # alpha >= 1 only; Psi(0+) = lim p Phi(p)^(-alpha) as p -> inf
    if kernel.strategy is not Strategy.Numeric:
        return kernel.scale / gamma(kernel.alpha) if kernel.alpha == 1.0 else 0.0
    probe = np.array([1e8, 1e10])
    values = (probe * kernel.symbol(0)(probe.astype(complex))).real
    if not np.isclose(values[0], values[1], rtol=1e-3, atol=1e-9):
        raise ValueError("kernel has no finite limit at t = 0")
    return float(values[1]) if abs(values[1]) > 1e-9 else 0.0


@lru_cache(maxsize=256)
def kernel_samples(kernel: Kernel, n: int, h: float, level: int) -> np.ndarray:
    """``K_level(j h)`` for ``j = 0..n``; level-0 node 0 is NaN when singular."""
    t = np.arange(n + 1) * h
    out = np.empty(n + 1)
    out[1:] = kernel_eval(kernel, t[1:], level)
    out[0] = np.nan if (level == 0 and kernel.singular) else kernel_eval(kernel, 0.0, level)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=256)
def cell_weights(kernel: Kernel, n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Product-integration moments on cells of width *h*.

    ``A[k] = int_{(k-1)h}^{kh} Psi`` and ``B[k] = int Psi(u) (kh - u)/h du`` over
    the same cell, for ``k = 1..n`` (index 0 unused, set to 0). A piecewise
    linear integrand on cell ``[t_j, t_j+1]`` seen from ``t_m`` (``k = m - j``)
    gets weight ``A - B`` on ``x_j`` and ``B`` on ``x_{j+1}``.
    """
    k1 = kernel_samples(kernel, n, h, 1)
    k2 = kernel_samples(kernel, n, h, 2)
    a = np.zeros(n + 1)
    b = np.zeros(n + 1)
    a[1:] = np.diff(k1)
    b[1:] = np.diff(k2) / h - k1[:-1]
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def semigroup_residual(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                       beta: float, grid: Grid, config: InversionConfig = TALBOT,
                       t_min: float = 0.0) -> float:
    """Discrete defect of ``Psi_alpha * Psi_beta = Psi_{alpha+beta}`` on *grid*.

    The identity is checked in its integrated form
    ``(Psi_alpha * Psi_beta) * 1 = K_1^{(alpha+beta)}``: the mass of
    ``Psi_beta`` on each cell is exact (from ``K_1``) and ``K_1^{(alpha)}`` is
    averaged over the cell exactly (from ``K_2``). Returns the max defect over
    the interior nodes with ``t >= t_min``.

    Over all nodes the defect converges like ``h^gamma`` where ``gamma`` is the
    small-time exponent of ``K_1^{(alpha+beta)}``; a fixed ``t_min > 0``
    removes that start-up layer from convergence studies.
    """
    k_a = make_kernel(generator, theta, alpha, config)
    k_b = make_kernel(generator, theta, beta, config)
    k_ab = make_kernel(generator, theta, alpha + beta, config)
    n, h = grid.n_steps, grid.h
    mass_b = np.diff(kernel_samples(k_b, n, h, 1))
    avg_a = np.zeros(n + 1)
    avg_a[1:] = np.diff(kernel_samples(k_a, n, h, 2)) / h
    conv = np.convolve(mass_b, avg_a)[: n + 1]
    exact = kernel_samples(k_ab, n, h, 1)
    idx = np.arange(n + 1)
    mask = (idx > 0) & (idx < n) & (grid.nodes >= t_min)
    return float(np.max(np.abs(conv[mask] - exact[mask]))) if np.any(mask) else 0.0


def semigroup_threshold(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                        beta: float, grid: Grid, config: InversionConfig = TALBOT) -> float:
    """Grid-scaled acceptance level ``10 h^0.9 K_1^{(alpha+beta)}(T)``."""
    k_ab = make_kernel(generator, theta, alpha + beta, config)
    return 10.0 * grid.h**0.9 * abs(kernel_eval(k_ab, grid.t_end, 1))


def admissibility_check(generator: GeneratorExpr, theta: ParamSet, alphas,
                        grid: Grid, config: InversionConfig = TALBOT,
                        p_probe: np.ndarray | None = None,
                        inversion_tol: float = 1e-4) -> VerificationReport:
    """Probe conditions (A1)-(A4); every failure becomes a report entry."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("admissibility needs at least one order")
    report = VerificationReport()
    suite = "admissibility"
    if p_probe is None:
        p_probe = np.logspace(-4, 4, 41)

    # (A1) positivity on (0, inf)
    try:
        phi = eval_generator(generator, theta, np.asarray(p_probe, dtype=float))
        imag = np.max(np.abs(phi.imag) / np.maximum(np.abs(phi), 1e-300))
        worst = float(np.min(phi.real))
        report.add(suite, "A1 positivity of Phi on (0, inf)", worst, 0.0,
                   passed=bool(worst > 0 and imag <= 1e-12),
                   note="measured = min Phi(p) on probe grid; must be > 0")
    except (GeneratorError, ArithmeticError) as exc:
        report.add(suite, "A1 positivity of Phi on (0, inf)", math.nan, 0.0, False, str(exc))

    t_end = grid.t_end
    samples = [t_end / 4, t_end / 2, t_end]
    for alpha in alphas:
        # (A2) two independent inversions of the level-1 symbol agree
        try:
            kern = make_kernel(generator, theta, alpha, config, numeric=True)
            sub = cross_validate(kern.symbol(1), samples, inversion_tol, suite=suite)
            worst = max(c.measured for c in sub.checks)
            scale = max(1.0, max(abs(kernel_eval(kern, t, 1)) for t in samples))
            report.add(suite, f"A2 inverse transform exists alpha={alpha:g}",
                       worst / scale, inversion_tol,
                       note="relative Talbot vs Stehfest on K_1")
        except (GeneratorError, ArithmeticError, ValueError) as exc:
            report.add(suite, f"A2 inverse transform exists alpha={alpha:g}",
                       math.nan, inversion_tol, False, str(exc))

        # (A3) local integrability proxy: K_1(T) finite and stable under refinement
        try:
            kern = make_kernel(generator, theta, alpha, config)
            k1 = kernel_eval(kern, t_end, 1)
            coarse = make_kernel(generator, theta, alpha, InversionConfig(node_count=32),
                                 numeric=True)
            drift = abs(kernel_eval(coarse, t_end, 1) - k1) / max(abs(k1), 1e-300)
            ok = math.isfinite(k1) and drift <= 1e-6
            report.add(suite, f"A3 K_1(T) finite alpha={alpha:g}", drift, 1e-6, passed=ok,
                       note="proxy for L1_loc: finite, resolution-stable K_1(T)")
        except (GeneratorError, ArithmeticError, ValueError) as exc:
            report.add(suite, f"A3 K_1(T) finite alpha={alpha:g}", math.nan, 1e-6, False,
                       str(exc))

    # (A4) semigroup relation on every pair of probed orders
    for i, alpha in enumerate(alphas):
        for beta in alphas[i:]:
            name = f"A4 semigroup alpha={alpha:g} beta={beta:g}"
            try:
                res = semigroup_residual(generator, theta, alpha, beta, grid, config)
                thr = semigroup_threshold(generator, theta, alpha, beta, grid, config)
                report.add(suite, name, res, thr)
            except (GeneratorError, ArithmeticError, ValueError) as exc:
                report.add(suite, name, math.nan, 0.0, False, str(exc))
    return report


def monotonicity_probe(kernel: Kernel, grid: Grid, max_order: int = 3) -> VerificationReport:
    """Sign pattern ``(-1)^n Delta^n Psi >= 0`` of kernel samples, ``n <= max_order``."""
    if not 0 <= max_order <= 3:
        raise ValueError("max_order must be in 0..3")
    if grid.n_steps < 1:
        raise ValueError("grid has no interior nodes")
    report = VerificationReport()
    samples = np.asarray(kernel_eval(kernel, grid.nodes[1:], 0), dtype=float)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(samples))))
    diffs = np.asarray(samples, dtype=float)
    for n in range(max_order + 1):
        if diffs.size == 0:
            break
        worst = float(np.min((-1) ** n * diffs))
        report.add("monotonicity", f"(-1)^{n} Delta^{n} Psi >= 0", worst, -tol,
                   passed=worst >= -tol, note="measured = min signed difference")
        diffs = np.diff(diffs)
    return report
