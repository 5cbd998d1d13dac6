"""JSON problem descriptions for the Langevin solver.

Schema (all keys optional except ``alpha``, ``beta``, ``x0``)::

    {"alpha": 0.5, "beta": 0.5, "generator": "p + lambda", "theta": {"lambda": 1},
     "dim": 1, "A": [-1], "B": [0], "x0": [1], "x1": [0], "t_end": 1,
     "n_steps": 256, "damping": {"const": 0} | {"expr": "0.1*sin(t)"},
     "sigma": "identity" | {"proportional": 0.5} | {"delay": 0.2},
     "F": "zero" | {"constant": 1} | {"cubic": -0.1} | ...,
     "velocity_term_mode": "cumulative-consistent", "corrector_iterations": 1}
"""

from __future__ import annotations

import ast
import math
import operator
from typing import Any, Callable

import numpy as np

from dynmem.generators import ParamSet, parse_generator
from dynmem.langevin import LangevinProblem, SolverOptions, VelocityTermMode

__all__ = ["ConfigError", "FORCING_REGISTRY", "time_expression", "load_problem"]


class ConfigError(ValueError):
    pass


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh,
}
_NAMES = {"pi": math.pi, "e": math.e}


def time_expression(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile a whitelisted arithmetic expression in ``t`` (``^`` means power)."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {text!r}: {exc.msg}") from exc

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            check(node.operand)
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            check(node.args[0])
        elif isinstance(node, ast.Name) and (node.id == "t" or node.id in _NAMES):
            pass
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        else:
            raise ConfigError(f"unsupported element in expression {text!r}")

    check(tree)

    def ev(node, t):
        if isinstance(node, ast.Expression):
            return ev(node.body, t)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, t), ev(node.right, t))
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand, t)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](ev(node.args[0], t))
        if isinstance(node, ast.Name):
            return t if node.id == "t" else _NAMES[node.id]
        return float(node.value)

    def fn(t):
        t = np.asarray(t, dtype=float)
        return ev(tree, t) + 0.0 * t

    return fn


def _forcing_zero(_):
    return lambda t, u, v: np.zeros_like(u)


def _forcing_constant(c):
    return lambda t, u, v: np.full_like(u, float(c))


def _forcing_cubic(c):
    return lambda t, u, v: float(c) * u ** 3


def _forcing_sine(c):
    return lambda t, u, v: np.full_like(u, float(c) * math.sin(t))


def _forcing_delayed_cubic(c):
    return lambda t, u, v: float(c) * v ** 3


def _forcing_saturation(c):
    return lambda t, u, v: float(c) * np.tanh(u)


FORCING_REGISTRY: dict[str, Callable[[Any], Callable]] = {
    "zero": _forcing_zero,
    "constant": _forcing_constant,
    "cubic": _forcing_cubic,
    "sine": _forcing_sine,
    "delayed-cubic": _forcing_delayed_cubic,
    "saturation": _forcing_saturation,
}


def _single(spec: Any, what: str) -> tuple[str, Any]:
    if isinstance(spec, str):
        return spec, None
    if isinstance(spec, dict) and len(spec) == 1:
        return next(iter(spec.items()))
    raise ConfigError(f"{what} must be a name or a one-key object, got {spec!r}")


def _damping(spec: Any) -> Callable:
    if spec is None:
        spec = {"const": 0.0}
    kind, value = _single(spec, "damping")
    if kind == "const":
        v = float(value)
        return lambda t: v + 0.0 * np.asarray(t, dtype=float)
    if kind == "expr":
        return time_expression(str(value))
    raise ConfigError(f"unknown damping kind {kind!r}")


def _sigma(spec: Any) -> Callable:
    kind, value = _single(spec if spec is not None else "identity", "sigma")
    if kind == "identity":
        return lambda t: np.asarray(t, dtype=float)
    if kind == "proportional":
        q = float(value)
        if not 0 <= q <= 1:
            raise ConfigError("proportional delay needs 0 <= q <= 1")
        return lambda t: q * np.asarray(t, dtype=float)
    if kind == "delay":
        tau = float(value)
        if tau < 0:
            raise ConfigError("delay must be non-negative")
        return lambda t: np.maximum(np.asarray(t, dtype=float) - tau, 0.0)
    raise ConfigError(f"unknown sigma kind {kind!r}")


def _forcing(spec: Any) -> Callable:
    kind, value = _single(spec if spec is not None else "zero", "F")
    if kind not in FORCING_REGISTRY:
        raise ConfigError(f"unknown forcing {kind!r}; known: {sorted(FORCING_REGISTRY)}")
    if kind != "zero" and value is None:
        raise ConfigError(f"forcing {kind!r} needs a coefficient")
    return FORCING_REGISTRY[kind](value)


def _vector(value: Any, d: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size != d:
        raise ConfigError(f"{name} must have {d} entries")
    return arr


def load_problem(cfg: dict) -> tuple[LangevinProblem, SolverOptions]:
    known = {"alpha", "beta", "generator", "theta", "dim", "A", "B", "x0", "x1", "t_end",
             "n_steps", "damping", "sigma", "F", "velocity_term_mode",
             "corrector_iterations"}
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    try:
        x0 = np.atleast_1d(np.asarray(cfg["x0"], dtype=float))
        d = int(cfg.get("dim", x0.size))
        x0 = _vector(x0, d, "x0")
        x1 = _vector(cfg.get("x1", [0.0] * d), d, "x1")
        a = _vector(cfg.get("A", [0.0] * d * d), d * d, "A").reshape(d, d)
        b = _vector(cfg.get("B", [0.0] * d * d), d * d, "B").reshape(d, d)
        generator = parse_generator(str(cfg.get("generator", "p")))
        theta = ParamSet(dict(cfg.get("theta", {})))
        problem = LangevinProblem(
            alpha=float(cfg["alpha"]), beta=float(cfg["beta"]),
            generator=generator, theta=theta, t_end=float(cfg.get("t_end", 1.0)),
            x0=x0, x1=x1, A=a, B=b,
            damping=_damping(cfg.get("damping")), sigma=_sigma(cfg.get("sigma")),
            F=_forcing(cfg.get("F")))
        options = SolverOptions(
            n_steps=int(cfg.get("n_steps", 256)),
            corrector_iterations=int(cfg.get("corrector_iterations", 1)),
            velocity_term_mode=VelocityTermMode(
                cfg.get("velocity_term_mode", "cumulative-consistent")))
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return problem, options
