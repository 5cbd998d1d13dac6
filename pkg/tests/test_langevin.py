import math

import numpy as np
import pytest

from dynmem.generators import make_preset
from dynmem.grid import Grid, GridFunction
from dynmem.langevin import (
    DivergenceError,
    LangevinProblem,
    SolverOptions,
    VelocityTermMode,
    check_uniqueness_condition,
    integral_form_forcing,
    manufactured_residual,
    solve,
)
from dynmem.operators import fractional_integral
from dynmem.problem_io import ConfigError, load_problem, time_expression

G0, TH0 = make_preset("classical")


def test_zero_problem_is_exact():
    p = LangevinProblem(0.5, 0.5, G0, TH0, 1.0, [1.3, -0.4])
    traj = solve(p, SolverOptions(64))
    assert np.max(np.abs(traj.states - [1.3, -0.4])) <= 1e-14


def test_relaxation_converges_to_exponential():
    # alpha + beta = 1 with A = -1 is x' = -x in integral form
    p = LangevinProblem(0.5, 0.5, G0, TH0, 1.0, [1.0], A=[[-1.0]])
    errs = []
    for n in (64, 128, 256):
        traj = solve(p, SolverOptions(n))
        errs.append(np.max(np.abs(traj.component(0).values - np.exp(-traj.grid.nodes))))
    assert errs[-1] < 1e-4
    assert math.log2(errs[1] / errs[2]) > 1.5
    assert traj.states[-1, 0] == pytest.approx(0.3678794, abs=1e-4)


@pytest.mark.parametrize("kind", ["tempered", "hybrid"])
def test_integral_form_forcing_reproduces_t(kind):
    g, th = make_preset(kind)
    p = LangevinProblem(0.3, 0.4, g, th, 1.0, [0.0], F=integral_form_forcing(g, th, 0.7))
    errs = [manufactured_residual(p, GridFunction(Grid(1.0, n), Grid(1.0, n).nodes),
                                  SolverOptions(n)) for n in (32, 128)]
    assert errs[1] < errs[0] / 2 and errs[1] < 0.02


def test_forcing_really_integrates_to_t():
    g, th = make_preset("tempered")
    f = integral_form_forcing(g, th, 0.8)
    grid = Grid(1.0, 512)
    samples = GridFunction(grid, [f(t, np.zeros(1), np.zeros(1))[0] for t in grid.nodes])
    y = fractional_integral(g, th, 0.8, samples)
    assert np.max(np.abs(y.values - grid.nodes)) < 5e-3


def test_velocity_modes_differ_only_with_x1():
    p = LangevinProblem(0.5, 0.5, G0, TH0, 1.0, [0.0], x1=[1.0])
    a = solve(p, SolverOptions(64, velocity_term_mode=VelocityTermMode.CumulativeConsistent))
    b = solve(p, SolverOptions(64, velocity_term_mode="paper-literal"))
    t = a.grid.nodes
    # K_1 of order 1/2 versus Psi_{1/2}
    np.testing.assert_allclose(a.states[1:, 0], 2 * np.sqrt(t[1:] / np.pi), rtol=1e-12)
    np.testing.assert_allclose(b.states[1:, 0], 1 / np.sqrt(np.pi * t[1:]), rtol=1e-12)


def test_delay_and_damping():
    p = LangevinProblem(0.5, 0.5, G0, TH0, 2.0, [1.0], A=[[-0.5]], B=[[0.2]],
                        damping=lambda t: 0.1 * np.sin(t), sigma=lambda t: 0.5 * t)
    traj = solve(p, SolverOptions(128, corrector_iterations=2))
    assert np.all(np.isfinite(traj.states))
    assert traj.corrector_deltas.shape == (128, 2)


def test_future_dependence_rejected():
    p = LangevinProblem(0.5, 0.5, G0, TH0, 1.0, [1.0], sigma=lambda t: np.minimum(2 * t, 1))
    with pytest.raises(ValueError):
        solve(p, SolverOptions(16))


def test_divergence_reported():
    p = LangevinProblem(0.5, 0.5, G0, TH0, 5.0, [2.0], F=lambda t, u, v: 10 * u ** 3)
    with pytest.raises(DivergenceError):
        solve(p, SolverOptions(64))


def test_uniqueness_boundary_case():
    p = LangevinProblem(0.5, 0.5, G0, TH0, 1.0, [1.0], A=[[-1.0]])
    c = check_uniqueness_condition(p, 0.0).checks[0]
    assert c.measured == pytest.approx(1.0, abs=1e-10) and not c.passed
    p = LangevinProblem(0.5, 0.5, G0, TH0, 0.5, [1.0], A=[[-1.0]])
    c = check_uniqueness_condition(p, 0.0).checks[0]
    assert c.measured == pytest.approx(0.5, abs=1e-10) and c.passed


@pytest.mark.parametrize("kwargs", [{"alpha": 1.0}, {"beta": 0.0}, {"t_end": -1.0}])
def test_problem_validation(kwargs):
    base = dict(alpha=0.5, beta=0.5, generator=G0, theta=TH0, t_end=1.0, x0=[1.0])
    base.update(kwargs)
    with pytest.raises(ValueError):
        LangevinProblem(**base)


def test_time_expression():
    f = time_expression("0.5*sin(t)^2 + exp(-t)")
    t = np.array([0.0, 1.0])
    np.testing.assert_allclose(f(t), 0.5 * np.sin(t) ** 2 + np.exp(-t))
    for bad in ("__import__('os')", "t.real", "open(t)", "t +"):
        with pytest.raises(ConfigError):
            time_expression(bad)


def test_load_problem_round_trip():
    problem, options = load_problem({
        "alpha": 0.4, "beta": 0.5, "generator": "p + lambda", "theta": {"lambda": 2},
        "x0": [1, 0], "A": [-1, 0, 0, -1], "damping": {"expr": "0.1*t"},
        "sigma": {"delay": 0.1}, "F": {"cubic": -0.1}, "n_steps": 64})
    assert problem.dim == 2 and options.n_steps == 64
    assert problem.A[0, 0] == -1.0
    assert solve(problem, options).states.shape == (65, 2)


@pytest.mark.parametrize("cfg", [
    {"beta": 0.5, "x0": [1]},
    {"alpha": 0.5, "beta": 0.5, "x0": [1], "bogus": 1},
    {"alpha": 0.5, "beta": 0.5, "x0": [1], "F": {"unknown": 1}},
    {"alpha": 0.5, "beta": 0.5, "x0": [1], "A": [1, 2]},
    {"alpha": 0.5, "beta": 0.5, "x0": [1], "sigma": {"proportional": 2}},
    {"alpha": 1.5, "beta": 0.5, "x0": [1]},
])
def test_load_problem_errors(cfg):
    with pytest.raises(ConfigError):
        load_problem(cfg)
