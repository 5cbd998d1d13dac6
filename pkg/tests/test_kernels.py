import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from dynmem.generators import ParamSet, make_preset, parse_generator
from dynmem.grid import Grid
from dynmem.kernels import (
    Strategy,
    admissibility_check,
    cell_weights,
    kernel_eval,
    kernel_samples,
    make_kernel,
    monotonicity_probe,
    semigroup_residual,
)


def test_strategy_selection():
    for kind, strategy in (("classical", Strategy.ClosedFormClassical),
                           ("tempered", Strategy.ClosedFormTempered),
                           ("affine", Strategy.ClosedFormAffine),
                           ("hybrid", Strategy.Numeric)):
        g, th = make_preset(kind)
        assert make_kernel(g, th, 0.5).strategy is strategy


def test_frozen_classical_value():
    g, th = make_preset("classical")
    assert kernel_eval(make_kernel(g, th, 0.5), 1.0) == pytest.approx(0.5641896, abs=1e-7)
    assert kernel_eval(make_kernel(g, th, 0.5), 1.0, 1) == pytest.approx(1.1283792, abs=1e-7)


@pytest.mark.parametrize("kind", ["classical", "tempered", "affine"])
@pytest.mark.parametrize("level", [0, 1, 2])
@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.4])
def test_closed_form_matches_inversion(kind, level, alpha):
    g, th = make_preset(kind)
    t = np.array([0.1, 0.8, 2.5])
    closed = kernel_eval(make_kernel(g, th, alpha), t, level)
    numeric = kernel_eval(make_kernel(g, th, alpha, numeric=True), t, level)
    np.testing.assert_allclose(closed, numeric, rtol=1e-9)


def test_level_zero_at_origin():
    g, th = make_preset("classical")
    with pytest.raises(ValueError):
        kernel_eval(make_kernel(g, th, 0.5), 0.0)
    assert kernel_eval(make_kernel(g, th, 0.5), 0.0, 1) == 0.0


def test_rejects_bad_order():
    g, th = make_preset("classical")
    for alpha in (0.0, -1.0, math.nan):
        with pytest.raises(ValueError):
            make_kernel(g, th, alpha)


def test_cell_weights_are_exact_masses():
    g, th = make_preset("tempered")
    k = make_kernel(g, th, 0.4)
    n, h = 16, 0.1
    a, b = cell_weights(k, n, h)
    k1 = kernel_samples(k, n, h, 1)
    np.testing.assert_allclose(a[1:], np.diff(k1), rtol=1e-12)
    # B integrates the linear hat against the kernel, so 0 <= B <= A
    assert np.all(b[1:] >= 0) and np.all(b[1:] <= a[1:])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 0.8), st.floats(0.2, 0.8))
def test_classical_semigroup_property(alpha, beta):
    g, th = make_preset("classical")
    res = semigroup_residual(g, th, alpha, beta, Grid(1.0, 256), t_min=0.1)
    assert res < 5e-3


def test_semigroup_residual_shrinks():
    g, th = make_preset("hybrid")
    r = [semigroup_residual(g, th, 0.5, 0.5, Grid(1.0, n), t_min=0.1) for n in (64, 256)]
    assert r[1] < r[0] / 3


def test_admissibility_accepts_tempered():
    g, th = make_preset("tempered")
    assert admissibility_check(g, th, (0.5,), Grid(1.0, 128)).overall


def test_admissibility_rejects_negative_generator():
    rep = admissibility_check(parse_generator("p - 2"), ParamSet(), (0.5,), Grid(1.0, 64))
    a1 = [c for c in rep.checks if c.name.startswith("A1")]
    assert a1 and not a1[0].passed


def test_monotonicity_of_completely_monotone_kernels():
    for kind in ("classical", "tempered", "hybrid"):
        g, th = make_preset(kind)
        assert monotonicity_probe(make_kernel(g, th, 0.5), Grid(1.0, 64), 3).overall
