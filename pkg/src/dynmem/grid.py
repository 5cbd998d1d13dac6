"""Uniform time grids and sampled functions on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Grid", "GridFunction"]


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``t_j = j*h`` on ``[0, t_end]`` with ``h = t_end/n_steps``."""

    t_end: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive and finite, got {self.t_end}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValueError(f"n_steps must be a non-negative integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "t_end", float(self.t_end))

    @property
    def h(self) -> float:
        return self.t_end / self.n_steps if self.n_steps else self.t_end

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.h

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.t_end, self.n_steps * factor)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a scalar or vector function on a :class:`Grid`.

    ``values`` has shape ``(n_steps + 1,)`` or ``(n_steps + 1, d)``. When
    ``node0_defined`` is false the first sample is NaN and must not be read;
    ``last_defined`` is the same marker for the final node (right-sided
    operators mirror the singular end there).
    """

    grid: Grid
    values: np.ndarray
    node0_defined: bool = True
    last_defined: bool = True

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim not in (1, 2) or values.shape[0] != self.grid.n_steps + 1:
            raise ValueError(
                f"expected {self.grid.n_steps + 1} samples, got shape {values.shape}")
        if not self.node0_defined:
            values[0] = np.nan
        if not self.last_defined:
            values[-1] = np.nan
        if not np.all(np.isfinite(values[self.defined_mask])):
            raise ValueError("grid function has non-finite defined samples")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "GridFunction":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float))

    @property
    def defined_mask(self) -> np.ndarray:
        mask = np.ones(self.grid.n_steps + 1, dtype=bool)
        mask[0] &= self.node0_defined
        mask[-1] &= self.last_defined
        return mask

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values,
                            self.node0_defined and other.node0_defined,
                            self.last_defined and other.last_defined)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values,
                            self.node0_defined and other.node0_defined,
                            self.last_defined and other.last_defined)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * scalar, self.node0_defined,
                            self.last_defined)

    __rmul__ = __mul__

    def reversed(self) -> "GridFunction":
        """Time reversal ``t -> t_end - t`` (the end markers swap)."""
        return GridFunction(self.grid, self.values[::-1].copy(),
                            self.last_defined, self.node0_defined)
