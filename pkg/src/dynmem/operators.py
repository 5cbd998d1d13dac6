"""Dynamic-memory fractional integral and derivatives on uniform grids.

Every operator reduces to a discrete convolution with product-integration
weights built from the cumulative kernels ``K_1``, ``K_2`` (see
:func:`dynmem.kernels.cell_weights`), so singular kernels need no special
handling. ``RectangleLeft`` freezes the integrand at the left end of each
cell; ``TrapezoidProduct`` integrates its piecewise-linear interpolant
exactly against the kernel. Right-sided operators are computed by time
reversal, which is exact because every generated kernel is a function of the
time difference only.
"""

from __future__ import annotations

import enum
from typing import Iterable

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import comb, gamma

from dynmem.generators import GeneratorExpr, ParamSet, affine_coefficients
from dynmem.grid import Grid, GridFunction
from dynmem.kernels import Kernel, cell_weights, make_kernel
from dynmem.laplace import InversionConfig, TALBOT

__all__ = [
    "QuadratureScheme",
    "Side",
    "DerivMode",
    "convolve",
    "fractional_integral",
    "rl_derivative",
    "caputo_derivative",
    "caputo_polynomial",
    "taylor_reconstruct",
    "ibp_residual",
    "grid_derivative",
]


class QuadratureScheme(enum.Enum):
    RectangleLeft = "rectangle"
    TrapezoidProduct = "trapezoid"


class Side(enum.Enum):
    Left = "left"
    Right = "right"


class DerivMode(enum.Enum):
    Supplied = "supplied"
    FiniteDifference = "finite-difference"
    CellSlopes = "cell-slopes"


def _column_convolve(values: np.ndarray, weights: np.ndarray, n: int) -> np.ndarray:
    if values.ndim == 1:
        return np.convolve(values, weights)[:n]
    return np.stack([np.convolve(values[:, i], weights)[:n]
                     for i in range(values.shape[1])], axis=1)


def convolve(kernel: Kernel, values: np.ndarray, h: float,
             scheme: QuadratureScheme = QuadratureScheme.TrapezoidProduct) -> np.ndarray:
    """``y_n ~ int_0^{t_n} Psi(t_n - s) x(s) ds`` for samples ``x_j = values[j]``.

    ``values`` has shape ``(n+1,)`` or ``(n+1, d)``; ``y_0 = 0``. Sums run in
    ascending ``j`` for every output node.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0] - 1
    out = np.zeros_like(values)
    if n < 1:
        return out
    a, b = cell_weights(kernel, n, h)
    scheme = QuadratureScheme(scheme)
    if scheme is QuadratureScheme.RectangleLeft:
        out[1:] = _column_convolve(values[:-1], a, n + 1)[1:]
    else:
        # weight A-B on the left node of each cell, B on the right node
        out[1:] = (_column_convolve(values[:-1], a - b, n + 1)[1:]
                   + _column_convolve(values[1:], b[1:], n))
    return out


def _kernel(generator, theta, alpha, config) -> Kernel:
    if isinstance(generator, Kernel):
        return generator
    return make_kernel(generator, theta, alpha, config)


def _degenerate(x: GridFunction) -> GridFunction:
    return GridFunction(x.grid, np.full_like(x.values, np.nan), node0_defined=False)


def fractional_integral(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                        x: GridFunction,
                        scheme: QuadratureScheme = QuadratureScheme.TrapezoidProduct,
                        side: Side = Side.Left,
                        config: InversionConfig = TALBOT) -> GridFunction:
    """Fractional integral of order *alpha* of the samples *x*."""
    if not alpha > 0:
        raise ValueError(f"integral order must be positive, got {alpha}")
    if not np.all(x.defined_mask):
        raise ValueError("fractional_integral needs x at every node")
    if x.grid.n_steps == 0:
        return _degenerate(x)
    kernel = _kernel(generator, theta, alpha, config)
    if Side(side) is Side.Right:
        flipped = convolve(kernel, x.values[::-1], x.grid.h, scheme)
        return GridFunction(x.grid, flipped[::-1].copy())
    return GridFunction(x.grid, convolve(kernel, x.values, x.grid.h, scheme))


def grid_derivative(x: GridFunction) -> GridFunction:
    """Second-order finite differences: centered inside, one-sided at the ends."""
    if x.grid.n_steps < 2:
        raise ValueError("finite differences need at least two steps")
    mask = x.defined_mask
    values = x.values
    if not np.all(mask):
        raise ValueError("finite differences need x at every node")
    return GridFunction(x.grid, np.gradient(values, x.grid.h, axis=0, edge_order=2))


def rl_derivative(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                  x: GridFunction, side: Side = Side.Left,
                  config: InversionConfig = TALBOT) -> GridFunction:
    """Riemann-Liouville type derivative: differentiate ``I^{1-alpha} x`` on the grid.

    The value at the memory origin (node 0 for the left side, the last node
    for the right side) is left undefined.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"derivative order must lie in (0, 1), got {alpha}")
    if x.grid.n_steps < 2:
        return _degenerate(x)
    side = Side(side)
    z = fractional_integral(generator, theta, 1.0 - alpha, x,
                            QuadratureScheme.TrapezoidProduct, side, config)
    dz = np.gradient(z.values, x.grid.h, axis=0, edge_order=2)
    if side is Side.Right:
        return GridFunction(x.grid, -dz, last_defined=False)
    return GridFunction(x.grid, dz, node0_defined=False)


def caputo_derivative(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                      x: GridFunction, side: Side = Side.Left,
                      deriv_mode: DerivMode = DerivMode.FiniteDifference,
                      dx: GridFunction | None = None,
                      config: InversionConfig = TALBOT) -> GridFunction:
    """Caputo type derivative ``I^{1-alpha} x'`` (negated for the right side).

    ``deriv_mode`` picks where ``x'`` comes from:

    * ``Supplied`` -- the samples ``dx`` as given, product-integrated with
      trapezoid weights;
    * ``FiniteDifference`` -- :func:`grid_derivative` samples, same weights;
    * ``CellSlopes`` -- the slope ``(x_{j+1} - x_j)/h`` held constant on each
      cell and integrated exactly against the kernel. Cell increments are
      reproduced exactly, which keeps the scheme consistent when ``x'`` is
      singular at the memory origin.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"derivative order must lie in (0, 1), got {alpha}")
    if x.grid.n_steps == 0:
        return _degenerate(x)
    side = Side(side)
    mode = DerivMode(deriv_mode)
    if mode is DerivMode.CellSlopes:
        if not np.all(x.defined_mask):
            raise ValueError("cell slopes need x at every node")
        kernel = _kernel(generator, theta, 1.0 - alpha, config)
        slopes = np.diff(x.values, axis=0) / x.grid.h
        pad = np.zeros_like(x.values[:1])
        if side is Side.Right:
            flipped = convolve(kernel, np.concatenate([slopes[::-1], pad]), x.grid.h,
                               QuadratureScheme.RectangleLeft)
            return GridFunction(x.grid, -flipped[::-1])
        return GridFunction(x.grid, convolve(kernel, np.concatenate([slopes, pad]),
                                             x.grid.h, QuadratureScheme.RectangleLeft))
    if mode is DerivMode.Supplied:
        if dx is None:
            raise ValueError("deriv_mode=supplied needs derivative samples dx")
        if dx.grid != x.grid:
            raise ValueError("x and dx live on different grids")
    else:
        dx = grid_derivative(x)
    y = fractional_integral(generator, theta, 1.0 - alpha, dx,
                            QuadratureScheme.TrapezoidProduct, side, config)
    return -1.0 * y if side is Side.Right else y


def _is_classical(generator, theta) -> bool:
    if isinstance(generator, Kernel):
        return False
    return affine_coefficients(generator, theta) == (1.0, 0.0)


def caputo_polynomial(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                      coeffs: Iterable[tuple[int, float]], shift: float, grid: Grid,
                      config: InversionConfig = TALBOT,
                      closed_form: bool | None = None) -> GridFunction:
    """Caputo derivative (memory origin 0) of ``sum_k a_k (t - shift)^k``.

    For the classical generator ``Phi = p`` the exact Gamma-ratio formula is
    used; otherwise (or with ``closed_form=False``) the derivative
    ``sum k a_k (t - shift)^(k-1)`` is product-integrated against
    ``Psi_{1-alpha}``.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"derivative order must lie in (0, 1), got {alpha}")
    terms = [(int(k), float(a)) for k, a in coeffs]
    if any(k < 0 for k, _ in terms):
        raise ValueError("polynomial degrees must be non-negative")
    t = grid.nodes
    if closed_form is None:
        closed_form = _is_classical(generator, theta)
    out = np.zeros_like(t)
    if closed_form:
        if not _is_classical(generator, theta):
            raise ValueError("the closed-form path exists only for Phi = p")
        # expand (s - shift)^(k-1) in powers of s, then apply the power rule
        for k, a_k in terms:
            for i in range(k):
                c = k * a_k * comb(k - 1, i, exact=True) * (-shift) ** (k - 1 - i)
                out += c * gamma(i + 1) / gamma(i + 2 - alpha) * t ** (i + 1 - alpha)
        return GridFunction(grid, out)
    deriv = np.zeros_like(t)
    for k, a_k in terms:
        if k > 0:
            deriv += k * a_k * (t - shift) ** (k - 1)
    return fractional_integral(generator, theta, 1.0 - alpha, GridFunction(grid, deriv),
                               QuadratureScheme.TrapezoidProduct, Side.Left, config)


def taylor_reconstruct(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                       x0, d: GridFunction, config: InversionConfig = TALBOT) -> GridFunction:
    """``x(0) + I^alpha d`` where ``d`` holds Caputo derivative samples."""
    y = fractional_integral(generator, theta, alpha, d,
                            QuadratureScheme.TrapezoidProduct, Side.Left, config)
    return GridFunction(d.grid, np.asarray(x0, dtype=float) + y.values, y.node0_defined)


def ibp_residual(generator: GeneratorExpr, theta: ParamSet, alpha: float,
                 x: GridFunction, y: GridFunction, dx: GridFunction | None = None,
                 config: InversionConfig = TALBOT) -> float:
    """Defect of the integration-by-parts identity on ``[0, T]``.

    Left side ``int y * cD^alpha x``; right side ``int x' * I_right^{1-alpha} y``.
    Outer integrals use the trapezoidal rule on grid samples.
    """
    if x.grid != y.grid:
        raise ValueError("x and y live on different grids")
    mode = DerivMode.FiniteDifference if dx is None else DerivMode.Supplied
    if dx is None:
        dx = grid_derivative(x)
    caputo = caputo_derivative(generator, theta, alpha, x, Side.Left, mode, dx, config)
    right = fractional_integral(generator, theta, 1.0 - alpha, y,
                                QuadratureScheme.TrapezoidProduct, Side.Right, config)
    h = x.grid.h
    lhs = trapezoid(y.values * caputo.values, dx=h, axis=0)
    rhs = trapezoid(dx.values * right.values, dx=h, axis=0)
    return float(np.max(np.abs(np.atleast_1d(lhs - rhs))))
