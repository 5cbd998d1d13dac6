"""Dynamic memory generators: expression trees over the Laplace variable.

A generator is a small expression over the Laplace variable ``p`` and named
real parameters, built from sums, products and real-exponent powers::

    >>> expr = parse_generator("(p + lambda)^0.6 + eta * p^0.4")
    >>> to_text(expr)
    '(p + lambda)^0.6 + eta * p^0.4'

Complex evaluation uses the principal branch of every power.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Variable",
    "Constant",
    "Parameter",
    "Sum",
    "Product",
    "Power",
    "GeneratorExpr",
    "ParamSet",
    "PresetKind",
    "GeneratorPreset",
    "GeneratorError",
    "GeneratorSyntaxError",
    "parse_generator",
    "to_text",
    "eval_generator",
    "symbol_power",
    "make_preset",
    "affine_coefficients",
    "parameter_names",
    "leading_term",
]


class GeneratorError(ValueError):
    """Raised for invalid generators, bindings or evaluation points."""


class GeneratorSyntaxError(GeneratorError):
    """Raised by :func:`parse_generator`; carries the offending position."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} (at position {position})")
        self.position = position


# {{{ expression tree


@dataclass(frozen=True)
class Variable:
    """The Laplace variable ``p``."""


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Parameter:
    name: str


@dataclass(frozen=True)
class Sum:
    terms: tuple


@dataclass(frozen=True)
class Product:
    factors: tuple


@dataclass(frozen=True)
class Power:
    base: "GeneratorExpr"
    exponent: float


GeneratorExpr = Union[Variable, Constant, Parameter, Sum, Product, Power]


@dataclass(frozen=True)
class ParamSet:
    """Named real parameters of a generator (lambda has units of 1/time)."""

    bindings: tuple = ()

    def __init__(self, bindings: Mapping[str, float] | tuple = ()) -> None:
        items = dict(bindings).items() if not isinstance(bindings, tuple) else bindings
        checked = []
        for name, value in items:
            if not name or not isinstance(name, str):
                raise GeneratorError(f"invalid parameter name: {name!r}")
            value = float(value)
            if not math.isfinite(value):
                raise GeneratorError(f"parameter {name!r} is not finite: {value}")
            checked.append((name, value))
        names = [n for n, _ in checked]
        if len(set(names)) != len(names):
            raise GeneratorError(f"duplicate parameter names in {names}")
        object.__setattr__(self, "bindings", tuple(sorted(checked)))

    def __getitem__(self, name: str) -> float:
        for key, value in self.bindings:
            if key == name:
                return value
        raise GeneratorError(f"unbound parameter: {name!r}")

    def __contains__(self, name: object) -> bool:
        return any(key == name for key, _ in self.bindings)

    def as_dict(self) -> dict[str, float]:
        return dict(self.bindings)


# }}}


# {{{ parser / printer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise GeneratorSyntaxError(f"unexpected character {text[col]!r}", col)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    # grammar:
    #   sum     := product (('+' | '-') product)*
    #   product := power ('*' power)*
    #   power   := atom ('^' signed_number)?
    #   atom    := signed_number | '-' power | identifier | '(' sum ')'
    # 'a - b' is sugar for 'a + (-1) * b' (folded for literals)

    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> GeneratorExpr:
        expr = self.sum()
        kind, value, pos = self.peek()
        if kind != "end":
            raise GeneratorSyntaxError(f"unexpected token {value!r}", pos)
        return expr

    def sum(self) -> GeneratorExpr:
        terms = [self.product()]
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            _, op, _ = self.take()
            term = self.product()
            if op == "-":
                term = (Constant(-term.value) if isinstance(term, Constant)
                        else Product((Constant(-1.0), term)))
            terms.append(term)
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def product(self) -> GeneratorExpr:
        factors = [self.power()]
        while self.peek()[1] == "*":
            self.take()
            factors.append(self.power())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def power(self) -> GeneratorExpr:
        base = self.atom()
        if self.peek()[1] != "^":
            return base
        self.take()
        sign = 1.0
        kind, value, pos = self.peek()
        if kind == "op" and value in ("+", "-"):
            self.take()
            sign = -1.0 if value == "-" else 1.0
            kind, value, pos = self.peek()
        if kind != "num":
            raise GeneratorSyntaxError("exponent must be a real literal", pos)
        self.take()
        if not math.isfinite(float(value)):
            raise GeneratorSyntaxError("literal overflows to infinity", pos)
        return Power(base, sign * float(value))

    def atom(self) -> GeneratorExpr:
        kind, value, pos = self.take()
        if kind == "op" and value == "-" and self.peek()[0] == "num":
            return Constant(-self.atom().value)
        if kind == "op" and value == "-":
            # unary minus binds looser than '^': -p^2 is -(p^2)
            return Product((Constant(-1.0), self.power()))
        if kind == "num":
            if not math.isfinite(float(value)):
                raise GeneratorSyntaxError("literal overflows to infinity", pos)
            return Constant(float(value))
        if kind == "ident":
            return Variable() if value == "p" else Parameter(value)
        if value == "(":
            inner = self.sum()
            kind, value, pos = self.take()
            if value != ")":
                raise GeneratorSyntaxError("expected ')'", pos)
            return inner
        if kind == "end":
            raise GeneratorSyntaxError("unexpected end of expression", pos)
        raise GeneratorSyntaxError(f"unexpected token {value!r}", pos)


def parse_generator(text: str) -> GeneratorExpr:
    """Parse *text* into a generator expression tree.

    The identifier ``p`` is reserved for the Laplace variable; every other
    identifier becomes a :class:`Parameter`. Exponents must be real literals.
    """
    if not isinstance(text, str):
        raise GeneratorError("generator text must be a string")
    return _Parser(text).parse()


def _fmt_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def to_text(expr: GeneratorExpr) -> str:
    """Canonical printer; its output re-parses to the same tree."""
    if isinstance(expr, Variable):
        return "p"
    if isinstance(expr, Constant):
        return _fmt_number(expr.value)
    if isinstance(expr, Parameter):
        return expr.name
    if isinstance(expr, Sum):
        # nested sums and products keep their parentheses so the tree re-parses as is
        return " + ".join(
            f"({to_text(t)})" if isinstance(t, Sum) else to_text(t) for t in expr.terms
        )
    if isinstance(expr, Product):
        return " * ".join(
            f"({to_text(f)})" if isinstance(f, (Sum, Product)) else to_text(f)
            for f in expr.factors
        )
    if isinstance(expr, Power):
        base = to_text(expr.base)
        if isinstance(expr.base, (Sum, Product, Power)):
            base = f"({base})"
        return f"{base}^{_fmt_number(expr.exponent)}"
    raise GeneratorError(f"not a generator expression: {expr!r}")


# }}}


# {{{ evaluation


def parameter_names(expr: GeneratorExpr) -> set[str]:
    if isinstance(expr, Parameter):
        return {expr.name}
    if isinstance(expr, Sum):
        return set().union(*(parameter_names(t) for t in expr.terms))
    if isinstance(expr, Product):
        return set().union(*(parameter_names(f) for f in expr.factors))
    if isinstance(expr, Power):
        return parameter_names(expr.base)
    return set()


def _eval(expr: GeneratorExpr, theta: ParamSet, p: np.ndarray) -> np.ndarray:
    if isinstance(expr, Variable):
        return p
    if isinstance(expr, Constant):
        return np.full_like(p, expr.value)
    if isinstance(expr, Parameter):
        return np.full_like(p, theta[expr.name])
    if isinstance(expr, Sum):
        result = _eval(expr.terms[0], theta, p)
        for term in expr.terms[1:]:
            result = result + _eval(term, theta, p)
        return result
    if isinstance(expr, Product):
        result = _eval(expr.factors[0], theta, p)
        for factor in expr.factors[1:]:
            result = result * _eval(factor, theta, p)
        return result
    if isinstance(expr, Power):
        base = _eval(expr.base, theta, p)
        if expr.exponent < 0 and np.any(base == 0):
            raise GeneratorError("branch point: zero base raised to a negative power")
        if expr.exponent == int(expr.exponent) and abs(expr.exponent) <= 8:
            return base ** int(expr.exponent)
        return np.power(base, expr.exponent)
    raise GeneratorError(f"not a generator expression: {expr!r}")


def eval_generator(expr: GeneratorExpr, theta: ParamSet, p):
    """Evaluate the generator at (scalar or array) complex *p*.

    Powers use the principal branch, with the cut along the negative real axis.
    """
    missing = parameter_names(expr) - {name for name, _ in theta.bindings}
    if missing:
        raise GeneratorError(f"unbound parameters: {sorted(missing)}")
    scalar = np.ndim(p) == 0
    arr = np.asarray(p, dtype=complex)
    with np.errstate(all="ignore"):
        value = _eval(expr, theta, np.atleast_1d(arr))
    return complex(value[0]) if scalar else value


def symbol_power(expr: GeneratorExpr, theta: ParamSet, alpha: float, p):
    """Laplace symbol ``Phi(p)^(-alpha)`` of the kernel of order *alpha*."""
    phi = eval_generator(expr, theta, p)
    if np.any(np.asarray(phi) == 0):
        raise GeneratorError("symbol pole: generator vanishes at the evaluation point")
    with np.errstate(all="ignore"):
        return np.power(phi, -float(alpha))


def affine_coefficients(expr: GeneratorExpr, theta: ParamSet) -> tuple[float, float] | None:
    """Return ``(a, b)`` if the generator is exactly ``a*p + b``, else ``None``."""
    if isinstance(expr, Variable):
        return (1.0, 0.0)
    if isinstance(expr, Constant):
        return (0.0, expr.value)
    if isinstance(expr, Parameter):
        return (0.0, theta[expr.name])
    if isinstance(expr, Sum):
        a = b = 0.0
        for term in expr.terms:
            coeffs = affine_coefficients(term, theta)
            if coeffs is None:
                return None
            a, b = a + coeffs[0], b + coeffs[1]
        return (a, b)
    if isinstance(expr, Product):
        a, b = 0.0, 1.0
        for factor in expr.factors:
            coeffs = affine_coefficients(factor, theta)
            if coeffs is None:
                return None
            if a != 0 and coeffs[0] != 0:
                return None
            a, b = a * coeffs[1] + b * coeffs[0], b * coeffs[1]
        return (a, b)
    if isinstance(expr, Power):
        if expr.exponent == 1.0:
            return affine_coefficients(expr.base, theta)
        if expr.exponent == 0.0:
            return (0.0, 1.0)
        coeffs = affine_coefficients(expr.base, theta)
        if coeffs is not None and coeffs[0] == 0 and coeffs[1] > 0:
            return (0.0, coeffs[1] ** expr.exponent)
        return None
    return None



def leading_term(expr: GeneratorExpr, theta: ParamSet) -> tuple[float, float] | None:
    """``(c, e)`` with ``Phi(p) ~ c p^e`` as ``p -> +inf``, or None if undecidable.

    None is returned when leading terms cancel or a non-positive base is
    raised to a fractional power.
    """
    if isinstance(expr, Variable):
        return (1.0, 1.0)
    if isinstance(expr, Constant):
        return (expr.value, 0.0) if expr.value != 0 else (0.0, -math.inf)
    if isinstance(expr, Parameter):
        v = theta[expr.name]
        return (v, 0.0) if v != 0 else (0.0, -math.inf)
    if isinstance(expr, Sum):
        parts = [leading_term(t, theta) for t in expr.terms]
        if any(part is None for part in parts):
            return None
        top = max(e for _, e in parts)
        coef = sum(c for c, e in parts if e == top)
        if coef == 0 and top != -math.inf:
            return None
        return (coef, top)
    if isinstance(expr, Product):
        c, e = 1.0, 0.0
        for factor in expr.factors:
            part = leading_term(factor, theta)
            if part is None:
                return None
            c, e = c * part[0], e + part[1]
        return (c, e)
    if isinstance(expr, Power):
        part = leading_term(expr.base, theta)
        if part is None or part[0] <= 0:
            return None
        return (part[0] ** expr.exponent, part[1] * expr.exponent)
    return None

# }}}


# {{{ presets


class PresetKind(enum.Enum):
    Classical = "classical"
    Tempered = "tempered"
    Affine = "affine"
    PowerScaled = "power-scaled"
    Hybrid = "hybrid"
    Custom = "custom"


# exponents must be literals in the grammar, so they are formatted in
_PRESET_TEXT = {
    PresetKind.Classical: "p",
    PresetKind.Tempered: "p + lambda",
    PresetKind.Affine: "a * p + b",
    PresetKind.PowerScaled: "p^{rho}",
    PresetKind.Hybrid: "(p + lambda)^{mu} + eta * p^{nu}",
}
_EXPONENT_PARAMS = {"rho", "mu", "nu"}

_PRESET_DEFAULTS = {
    PresetKind.Classical: {},
    PresetKind.Tempered: {"lambda": 1.0},
    PresetKind.Affine: {"a": math.sin(math.pi / 4), "b": math.cos(math.pi / 4)},
    PresetKind.PowerScaled: {"rho": 0.5},
    PresetKind.Hybrid: {"lambda": 1.0, "eta": 0.5, "mu": 0.6, "nu": 0.4},
}


@dataclass(frozen=True)
class GeneratorPreset:
    """One of the named generator families.

    Parameters not given take the family defaults; ``text`` is only used by
    :attr:`PresetKind.Custom`.
    """

    kind: PresetKind
    params: tuple = field(default=())
    text: str = ""

    def __init__(self, kind: PresetKind | str, params: Mapping[str, float] | None = None,
                 text: str = "") -> None:
        kind = PresetKind(kind) if not isinstance(kind, PresetKind) else kind
        merged = dict(_PRESET_DEFAULTS.get(kind, {}))
        merged.update(params or {})
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(sorted(merged.items())))
        object.__setattr__(self, "text", text)

    @property
    def name(self) -> str:
        return self.kind.value


def _check_preset(preset: GeneratorPreset) -> None:
    v = dict(preset.params)
    kind = preset.kind
    if kind is PresetKind.Tempered and not v["lambda"] > 0:
        raise GeneratorError("tempered preset needs lambda > 0")
    if kind is PresetKind.Affine and not (v["a"] > 0 and v["b"] >= 0):
        raise GeneratorError("affine preset needs a > 0 and b >= 0")
    if kind is PresetKind.PowerScaled and not 0 < v["rho"] <= 1:
        raise GeneratorError("power-scaled preset needs 0 < rho <= 1")
    if kind is PresetKind.Hybrid and not (
        v["lambda"] > 0 and v["eta"] > 0 and 0 < v["mu"] < 1 and 0 < v["nu"] < 1
    ):
        raise GeneratorError("hybrid preset needs lambda, eta > 0 and 0 < mu, nu < 1")
    if kind is PresetKind.Custom and not preset.text:
        raise GeneratorError("custom preset needs an expression text")


def make_preset(preset: GeneratorPreset | str) -> tuple[GeneratorExpr, ParamSet]:
    """Expression tree and bindings for a preset family."""
    if isinstance(preset, str):
        preset = GeneratorPreset(preset)
    _check_preset(preset)
    values = dict(preset.params)
    if preset.kind is PresetKind.Custom:
        text = preset.text
    else:
        text = _PRESET_TEXT[preset.kind].format(
            **{k: _fmt_number(v) for k, v in values.items() if k in _EXPONENT_PARAMS})
        values = {k: v for k, v in values.items() if k not in _EXPONENT_PARAMS}
    expr = parse_generator(text)
    theta = ParamSet(values)
    missing = parameter_names(expr) - set(theta.as_dict())
    if missing:
        raise GeneratorError(f"unbound parameters: {sorted(missing)}")
    return expr, theta


# }}}
