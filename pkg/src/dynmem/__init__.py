"""Generator-driven fractional calculus with dynamic memory kernels."""

from dynmem.generators import (
    GeneratorPreset,
    ParamSet,
    PresetKind,
    eval_generator,
    make_preset,
    parse_generator,
    symbol_power,
    to_text,
)
from dynmem.grid import Grid, GridFunction
from dynmem.kernels import Kernel, kernel_eval, make_kernel
from dynmem.laplace import InversionConfig, InversionMethod, invert
from dynmem.langevin import LangevinProblem, SolverOptions, solve
from dynmem.mittag_leffler import MLQuery, ml_classical, ml_dynamic, relaxation_solve
from dynmem.operators import (
    DerivMode,
    QuadratureScheme,
    Side,
    caputo_derivative,
    caputo_polynomial,
    fractional_integral,
    rl_derivative,
)

__version__ = "0.1.0"
