import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erf

from dynmem.grid import Grid
from dynmem.laplace import (
    STEHFEST,
    TALBOT,
    InversionConfig,
    InversionError,
    cross_validate,
    forward_transform,
    invert,
    invert_on_grid,
    stehfest_weights,
)


@pytest.mark.parametrize("symbol, exact", [
    (lambda p: 1 / p, lambda t: 1.0 + 0 * t),
    (lambda p: 1 / (p + 1), lambda t: np.exp(-t)),
    (lambda p: 1 / p**2, lambda t: t),
    (lambda p: p**-0.5, lambda t: 1 / np.sqrt(np.pi * t)),
    (lambda p: 1 / (p**2 + 1), np.sin),
    (lambda p: 1 / (p * np.sqrt(p + 1)), lambda t: erf(np.sqrt(t))),
])
def test_talbot_known_pairs(symbol, exact):
    # oscillatory originals lose a little accuracy at large t
    t = np.array([0.05, 0.5, 1.0, 3.0, 7.0])
    np.testing.assert_allclose(invert(symbol, t), exact(t), rtol=1e-8, atol=1e-12)


def test_frozen_values():
    assert invert(lambda p: p**-0.5, 1.0) == pytest.approx(0.5641896, abs=1e-7)
    assert invert(lambda p: 1 / (p * np.sqrt(p + 1)), 1.0) == pytest.approx(0.8427008, abs=1e-7)
    assert invert(lambda p: 1 / (p + 2), 1.0) == pytest.approx(0.1353353, abs=1e-7)


def test_stehfest_monotone_originals():
    t = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(invert(lambda p: 1 / (p + 1), t, STEHFEST), np.exp(-t),
                               rtol=1e-4)


def test_stehfest_fails_on_oscillation():
    # a real-axis method cannot resolve sin; the cross-check must flag it
    report = cross_validate(lambda p: 1 / (p**2 + 1), [4.0, 8.0], 1e-4)
    assert not report.overall


def test_stehfest_weights_sum_to_zero():
    for n in (2, 8, 14, 20):
        w = stehfest_weights(n)
        assert abs(w.sum()) <= 1e-8 * np.abs(w).max()


def test_rejects_nonpositive_times():
    with pytest.raises(InversionError):
        invert(lambda p: 1 / p, [0.0, 1.0])


def test_nonfinite_symbol():
    with pytest.raises(InversionError):
        invert(lambda p: np.full_like(p, np.nan), 1.0)


@pytest.mark.parametrize("kwargs", [
    {"node_count": 7}, {"node_count": 4}, {"method": "gaver-stehfest", "node_count": 22},
    {"contour_scale": 0.0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        InversionConfig(**kwargs)


def test_invert_on_grid_marks_node0():
    g = Grid(1.0, 8)
    f = invert_on_grid(lambda p: 1 / (p + 1), g)
    assert not f.node0_defined and np.isnan(f.values[0])
    f = invert_on_grid(lambda p: 1 / (p + 1), g, value_at_zero=1.0)
    np.testing.assert_allclose(f.values, np.exp(-g.nodes), rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_inversion_is_linear(t, a, b):
    f1 = lambda p: 1 / (p + 1)
    f2 = lambda p: p**-1.5
    lhs = invert(lambda p: a * f1(p) + b * f2(p), t)
    rhs = a * invert(f1, t) + b * invert(f2, t)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_batching_does_not_change_values():
    t = np.linspace(0.1, 2, 9)
    batch = invert(lambda p: p**-0.3, t)
    single = [invert(lambda p: p**-0.3, s) for s in t]
    np.testing.assert_array_equal(batch, single)


def test_forward_transform_of_sine():
    g = Grid(32.0, 1024)
    p = np.array([0.5, 1.0, 2.0, 5.0])
    got = forward_transform(np.sin(g.nodes), g.h, p)
    np.testing.assert_allclose(got, 1 / (p**2 + 1), rtol=3e-5)
    with pytest.raises(ValueError):
        forward_transform(np.ones(5), 0.1, [0.0])
