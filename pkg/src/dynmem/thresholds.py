"""Every verification tolerance in one versioned table.

The README reproduces this table; change both together and bump the version.
"""

THRESHOLDS_VERSION = "1"

THRESHOLDS = {
    # errors at or below this level count as converged in order studies
    "roundoff_floor": 1e-10,
    "admissibility.inversion_rel": 1e-4,
    "semigroup.order": 0.9,
    "semigroup.t_min_fraction": 0.1,
    "semigroup.classical_abs_n256": 0.02,
    "semigroup.commutativity": 1e-12,
    "inverse-relations.order": 0.8,
    "linearity.rel": 1e-12,
    "constants.abs": 1e-12,
    "power-formulas.closed_abs": 1e-12,
    "power-formulas.order": 0.8,
    "laplace-reduction.rel": 1e-3,
    "laplace-reduction.t_end": 32.0,
    "laplace-reduction.n_steps": 1024,
    "ml-reduction.abs": 1e-6,
    "ml-eigen.order": 0.8,
    "ibp.order": 0.8,
    "ibp.constant_abs": 1e-12,
    "taylor.order": 0.8,
    "limits.n_steps": 2048,
    "monotonicity.first_order_factor": 1.0,
    "langevin.abs_n256": 0.05,
    "langevin.order": 0.8,
    "langevin.zero_abs": 1e-14,
    "uniqueness.boundary_abs": 1e-10,
}
