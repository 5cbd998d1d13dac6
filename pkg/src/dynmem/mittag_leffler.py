"""Classical and dynamic-memory Mittag-Leffler functions.

The classical ``E_alpha(z)`` is evaluated independently of any Laplace
inversion (mpmath power series at a working precision large enough to absorb
the cancellation for negative arguments, or the optimally truncated
asymptotic series for large negative arguments), so comparing it with the
inverted dynamic-memory function is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from dynmem.generators import GeneratorExpr, ParamSet, eval_generator, leading_term
from dynmem.grid import Grid, GridFunction
from dynmem.laplace import InversionConfig, TALBOT, invert
from dynmem.operators import DerivMode, Side, caputo_derivative, grid_derivative

__all__ = [
    "MLQuery",
    "MLError",
    "ml_classical",
    "ml_dynamic",
    "ml_initial_value",
    "ml_eigen_residual",
    "relaxation_solve",
]

# digits of cancellation the series branch accepts before switching to the
# asymptotic expansion (negative z) or giving up
_MAX_CANCEL_DIGITS = 400
_MAX_TERMS = 200_000


class MLError(ValueError):
    pass


def _series(alpha: float, z: float, cancel_digits: float) -> float:
    with mpmath.workdps(int(cancel_digits) + 30):
        a = mpmath.mpf(alpha)
        zz = mpmath.mpf(z)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        tiny = mpmath.mpf(10) ** (-(int(cancel_digits) + 20))
        # terms peak near k ~ |z|^(1/alpha) / alpha, then decay for good
        peak = abs(z) ** (1.0 / alpha) / alpha if z else 0.0
        for k in range(_MAX_TERMS):
            term = power * mpmath.rgamma(a * k + 1)
            total += term
            if k > peak + 2 and abs(term) <= tiny * max(abs(total), tiny):
                return float(total)
            power *= zz
        raise MLError(f"series for E_{alpha}({z}) did not converge")


def _asymptotic(alpha: float, z: float) -> float:
    # E_a(z) ~ -sum_k z^(-k)/Gamma(1 - a k) for z -> -inf, 0 < a < 1;
    # truncated just before the smallest term
    total = 0.0
    previous = math.inf
    for k in range(1, 60):
        term = -(z ** -k) * float(mpmath.rgamma(1 - alpha * k))
        if term != 0.0 and abs(term) > previous:
            break
        total += term
        if term != 0.0:
            previous = abs(term)
    return total


def ml_classical(alpha: float, z: float) -> float:
    """One-parameter Mittag-Leffler function ``sum z^k / Gamma(alpha k + 1)``.

    Envelope: any ``z >= 0`` whose value fits in a double, and ``z < 0`` down
    to where the series cancellation exceeds about 400 digits; beyond that,
    ``0 < alpha < 1`` switches to the asymptotic expansion. Anything else
    raises :class:`MLError`.
    """
    if not 0 < alpha < 2:
        raise MLError(f"alpha must lie in (0, 2), got {alpha}")
    z = float(z)
    if not math.isfinite(z):
        raise MLError("z must be finite")
    if z == 0.0:
        return 1.0
    growth = abs(z) ** (1.0 / alpha)  # log of the largest series term
    if z > 0:
        if growth > 700:
            raise MLError(f"E_{alpha}({z}) overflows a double")
        return _series(alpha, z, growth / math.log(10))
    cancel = growth / math.log(10)
    if cancel <= _MAX_CANCEL_DIGITS:
        return _series(alpha, z, cancel)
    if alpha < 1:
        return _asymptotic(alpha, z)
    raise MLError(f"z = {z} is outside the evaluation envelope for alpha = {alpha}")


@dataclass(frozen=True)
class MLQuery:
    generator: GeneratorExpr
    theta: ParamSet
    alpha: float
    lam: float
    grid: Grid
    config: InversionConfig = TALBOT

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise MLError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not math.isfinite(self.lam):
            raise MLError("lambda must be finite")

    def symbol(self):
        g, th, a, lam = self.generator, self.theta, self.alpha, self.lam

        def fn(p):
            phi = eval_generator(g, th, p)
            phi_a = np.power(phi, a)
            den = phi_a - lam
            if np.any(np.abs(den) <= 1e-13 * np.maximum(np.abs(phi_a), 1.0)):
                raise MLError("Phi^alpha = lambda at an inversion node")
            return phi_a / phi / den

        return fn


def _check_real_pole(query: MLQuery) -> None:
    # a positive real pole beyond the contour's real crossing would be missed
    if query.lam <= 0 or query.grid.n_steps == 0:
        return
    p = np.logspace(-6, 8, 400)
    phi_a = np.power(np.real(eval_generator(query.generator, query.theta, p + 0j)),
                     query.alpha)
    sign = np.sign(phi_a - query.lam)
    crossing = 0.171 * query.config.node_count * query.config.contour_scale / query.grid.t_end
    change = np.nonzero(sign[1:] != sign[:-1])[0]
    if change.size and p[change[-1] + 1] > crossing:
        raise MLError("symbol pole lies outside the inversion contour; "
                      "increase contour_scale or shorten the grid")


def ml_initial_value(query: MLQuery) -> float | None:
    """Limit ``E(0+) = lim p X(p)`` as ``p -> inf`` if finite, else None.

    With ``Phi ~ c p^e`` the limit is ``1/c`` for ``e = 1``, zero for ``e > 1``
    and infinite for slower growth.
    """
    lead = leading_term(query.generator, query.theta)
    if lead is None:
        return None
    c, e = lead
    if e > 1 and c > 0:
        return 0.0
    if e == 1 and c > 0:
        return 1.0 / c
    return None


def ml_dynamic(query: MLQuery) -> GridFunction:
    """``E_{Phi,alpha}(lambda, t)`` by inverting ``Phi^(alpha-1)/(Phi^alpha - lambda)``.

    Node 0 carries the initial-value limit when it is finite and is left
    undefined otherwise.
    """
    _check_real_pole(query)
    grid = query.grid
    values = np.empty(grid.n_steps + 1)
    e0 = ml_initial_value(query)
    values[0] = np.nan if e0 is None else e0
    if grid.n_steps:
        values[1:] = invert(query.symbol(), grid.nodes[1:], query.config)
    return GridFunction(grid, values, node0_defined=e0 is not None)


def ml_eigen_residual(query: MLQuery, deriv_mode: DerivMode = DerivMode.CellSlopes,
                      t_min: float | None = None) -> float:
    """Max ``|cD^alpha E - lambda E|`` over interior nodes with ``t >= t_min``.

    ``E'`` is never supplied: it comes from the grid samples through
    *deriv_mode*. Near ``t = 0`` the derivative of ``E`` behaves like
    ``t^(alpha-1)``, and every local difference scheme keeps an O(1) defect
    at the first node, so by default the maximum is taken over
    ``t >= T/10``.
    """
    e = ml_dynamic(query)
    if not e.node0_defined:
        raise MLError("E(0) is undefined for this generator; the Caputo "
                      "derivative needs a finite initial value")
    grid = query.grid
    if t_min is None:
        t_min = 0.1 * grid.t_end
    if query.alpha == 1.0:
        d = grid_derivative(e)
    else:
        d = caputo_derivative(query.generator, query.theta, query.alpha, e, Side.Left,
                              deriv_mode, config=query.config)
    idx = np.arange(grid.n_steps + 1)
    mask = (idx > 0) & (idx < grid.n_steps) & (grid.nodes >= t_min)
    res = np.abs(d.values - query.lam * e.values)[mask]
    return float(np.max(res)) if res.size else 0.0


def relaxation_solve(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                     kappa: float, x0: float, grid: Grid,
                     config: InversionConfig = TALBOT) -> GridFunction:
    """Solution ``x0 E_{Phi,alpha}(-kappa, t)`` of the relaxation problem."""
    if not kappa > 0:
        raise MLError(f"kappa must be positive, got {kappa}")
    e = ml_dynamic(MLQuery(generator, theta, alpha, -kappa, grid, config))
    values = x0 * np.nan_to_num(e.values)
    values[0] = x0
    return GridFunction(grid, values)
