"""Closed family of real scalar time functions with exact calculus.

Members: constants, affine ``a*t + b``, sinusoids ``sin/cos(omega*t + delta)``,
finite sums, scalar multiples, and products of two atoms. Derivatives stay in
the family; antiderivatives do too except for affine*affine products, which
are rejected (their antiderivative would need a cubic). Antiderivatives are
normalized so that F(0) = 0.

The textual grammar accepted by :func:`parse`::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := '-' factor | atom
    atom   := NUMBER | 'pi' | 't' | 'sin' '(' expr ')' | 'cos' '(' expr ')'
              | '(' expr ')'

Sinusoid arguments must be affine in t, and any product must reduce to the
closed family (constants fold; products distribute over sums).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np


class ClosedFamilyError(ValueError):
    """The requested operation leaves the closed function family."""


class TimeFunctionSyntaxError(ValueError):
    pass


class TimeFunction:
    """Base class; concrete nodes implement _eval, derivative, _raw_antiderivative."""

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = self._eval(arr)
        return float(out) if arr.ndim == 0 else out

    def _eval(self, t: np.ndarray):
        raise NotImplementedError

    def derivative(self) -> "TimeFunction":
        raise NotImplementedError

    def _raw_antiderivative(self) -> "TimeFunction":
        raise NotImplementedError

    def antiderivative(self) -> "TimeFunction":
        """Antiderivative F with F(0) = 0 (exactly, after rounding polish)."""
        g = self._raw_antiderivative()
        for _ in range(5):
            z = float(g(0.0))
            if z == 0.0:
                break
            g = add(g, Const(-z))
        return g

    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(-1.0, _coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), scale(-1.0, self))

    def __mul__(self, other):
        return multiply(self, _coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(-1.0, self)


def _coerce(x) -> TimeFunction:
    if isinstance(x, TimeFunction):
        return x
    return Const(float(x))


@dataclass(frozen=True)
class Const(TimeFunction):
    value: float

    def _eval(self, t):
        return self.value * np.ones_like(t)

    def derivative(self):
        return Const(0.0)

    def _raw_antiderivative(self):
        return Linear(self.value, 0.0)

    def __str__(self):
        return f"{self.value:g}"


@dataclass(frozen=True)
class Linear(TimeFunction):
    slope: float
    intercept: float = 0.0

    def _eval(self, t):
        return self.slope * t + self.intercept

    def derivative(self):
        return Const(self.slope)

    def _raw_antiderivative(self):
        # a*t + b -> (a/2) t^2 + b t; t^2 is a depth-1 product.
        quadratic = Product(Linear(1.0), Linear(1.0))
        return add(scale(self.slope / 2, quadratic), Linear(self.intercept, 0.0))

    def __str__(self):
        if self.intercept == 0.0:
            return f"{self.slope:g}*t"
        return f"{self.slope:g}*t + {self.intercept:g}"


@dataclass(frozen=True)
class Trig(TimeFunction):
    kind: str  # "sin" | "cos"
    omega: float
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"unknown sinusoid kind {self.kind!r}")

    def _eval(self, t):
        arg = self.omega * t + self.delta
        return np.sin(arg) if self.kind == "sin" else np.cos(arg)

    def derivative(self):
        if self.kind == "sin":
            return scale(self.omega, Trig("cos", self.omega, self.delta))
        return scale(-self.omega, Trig("sin", self.omega, self.delta))

    def _raw_antiderivative(self):
        if self.kind == "sin":
            return scale(-1.0 / self.omega, Trig("cos", self.omega, self.delta))
        return scale(1.0 / self.omega, Trig("sin", self.omega, self.delta))

    def __str__(self):
        if self.delta == 0.0:
            return f"{self.kind}({self.omega:g}*t)"
        return f"{self.kind}({self.omega:g}*t + {self.delta:g})"


def _trig(kind: str, omega: float, delta: float) -> TimeFunction:
    """Sinusoid that folds to a constant when omega = 0."""
    if omega == 0.0:
        return Const(math.sin(delta) if kind == "sin" else math.cos(delta))
    return Trig(kind, float(omega), float(delta))


@dataclass(frozen=True)
class Sum(TimeFunction):
    terms: tuple[TimeFunction, ...]

    def _eval(self, t):
        out = np.zeros_like(t)
        for term in self.terms:
            out = out + term._eval(t)
        return out

    def derivative(self):
        return add(*(term.derivative() for term in self.terms))

    def _raw_antiderivative(self):
        return add(*(term._raw_antiderivative() for term in self.terms))

    def __str__(self):
        return " + ".join(str(t) for t in self.terms)


@dataclass(frozen=True)
class Scaled(TimeFunction):
    coeff: float
    inner: TimeFunction

    def _eval(self, t):
        return self.coeff * self.inner._eval(t)

    def derivative(self):
        return scale(self.coeff, self.inner.derivative())

    def _raw_antiderivative(self):
        return scale(self.coeff, self.inner._raw_antiderivative())

    def __str__(self):
        return f"{self.coeff:g}*({self.inner})"


@dataclass(frozen=True)
class Product(TimeFunction):
    """Product of two atoms (Linear or Trig); deeper nesting is rejected."""

    left: TimeFunction
    right: TimeFunction

    def __post_init__(self):
        for f in (self.left, self.right):
            if not isinstance(f, (Linear, Trig)):
                raise ClosedFamilyError(
                    f"products are limited to depth 1 over atoms, got factor {f}")

    def _eval(self, t):
        return self.left._eval(t) * self.right._eval(t)

    def derivative(self):
        return add(multiply(self.left.derivative(), self.right),
                   multiply(self.left, self.right.derivative()))

    def _raw_antiderivative(self):
        lin, trig = None, None
        for f, g in ((self.left, self.right), (self.right, self.left)):
            if isinstance(f, Linear) and isinstance(g, Trig):
                lin, trig = f, g
        if lin is not None:
            # Integration by parts: int (a t + b) trig = boundary - (a/w) int ...
            a, w = lin.slope, trig.omega
            if trig.kind == "sin":
                return add(scale(-1.0 / w, Product(lin, Trig("cos", w, trig.delta))),
                           scale(a / w ** 2, Trig("sin", w, trig.delta)))
            return add(scale(1.0 / w, Product(lin, Trig("sin", w, trig.delta))),
                       scale(a / w ** 2, Trig("cos", w, trig.delta)))
        if isinstance(self.left, Trig) and isinstance(self.right, Trig):
            return _trig_product_to_sum(self.left, self.right)._raw_antiderivative()
        raise ClosedFamilyError(
            f"antiderivative of ({self.left})*({self.right}) leaves the closed family "
            "(it would require a cubic)")

    def __str__(self):
        return f"({self.left})*({self.right})"


def _trig_product_to_sum(f: Trig, g: Trig) -> TimeFunction:
    """Rewrite trig*trig as a sum of sinusoids (product-to-sum identities)."""
    wp, dp = f.omega + g.omega, f.delta + g.delta
    wm, dm = f.omega - g.omega, f.delta - g.delta
    if f.kind == "sin" and g.kind == "sin":
        return add(scale(0.5, _trig("cos", wm, dm)), scale(-0.5, _trig("cos", wp, dp)))
    if f.kind == "cos" and g.kind == "cos":
        return add(scale(0.5, _trig("cos", wm, dm)), scale(0.5, _trig("cos", wp, dp)))
    if f.kind == "sin" and g.kind == "cos":
        return add(scale(0.5, _trig("sin", wp, dp)), scale(0.5, _trig("sin", wm, dm)))
    return _trig_product_to_sum(g, f)  # cos*sin


def add(*terms: TimeFunction) -> TimeFunction:
    """Flattening sum that folds constants and affine terms together."""
    flat: list[TimeFunction] = []
    slope = intercept = 0.0
    for term in terms:
        inner = term.terms if isinstance(term, Sum) else (term,)
        for f in inner:
            if isinstance(f, Const):
                intercept += f.value
            elif isinstance(f, Linear):
                slope += f.slope
                intercept += f.intercept
            elif isinstance(f, Scaled) and f.coeff == 0.0:
                pass
            else:
                flat.append(f)
    if slope != 0.0:
        flat.insert(0, Linear(slope, intercept))
    elif intercept != 0.0 or not flat:
        flat.insert(0, Const(intercept))
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def scale(coeff: float, f: TimeFunction) -> TimeFunction:
    coeff = float(coeff)
    if coeff == 0.0:
        return Const(0.0)
    if coeff == 1.0:
        return f
    if isinstance(f, Const):
        return Const(coeff * f.value)
    if isinstance(f, Linear):
        return Linear(coeff * f.slope, coeff * f.intercept)
    if isinstance(f, Scaled):
        return scale(coeff * f.coeff, f.inner)
    if isinstance(f, Sum):
        return add(*(scale(coeff, term) for term in f.terms))
    return Scaled(coeff, f)


def multiply(f: TimeFunction, g: TimeFunction) -> TimeFunction:
    """Product combinator: folds constants, distributes over sums, pairs atoms."""
    if isinstance(f, Const):
        return scale(f.value, g)
    if isinstance(g, Const):
        return scale(g.value, f)
    if isinstance(f, Scaled):
        return scale(f.coeff, multiply(f.inner, g))
    if isinstance(g, Scaled):
        return scale(g.coeff, multiply(f, g.inner))
    if isinstance(f, Sum):
        return add(*(multiply(term, g) for term in f.terms))
    if isinstance(g, Sum):
        return add(*(multiply(f, term) for term in g.terms))
    if isinstance(f, (Linear, Trig)) and isinstance(g, (Linear, Trig)):
        return Product(f, g)
    raise ClosedFamilyError(
        f"product ({f})*({g}) exceeds the depth-1 product limit")


def const(value: float) -> TimeFunction:
    return Const(float(value))


def linear(slope: float, intercept: float = 0.0) -> TimeFunction:
    return Linear(float(slope), float(intercept))


def sine(omega: float = 1.0, delta: float = 0.0) -> TimeFunction:
    return _trig("sin", omega, delta)


def cosine(omega: float = 1.0, delta: float = 0.0) -> TimeFunction:
    return _trig("cos", omega, delta)


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|([A-Za-z_]+)|([()+\-*]))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise TimeFunctionSyntaxError(
                f"unexpected character {text[pos]!r} at position {pos} in {text!r}")
        if m.group(1):
            tokens.append(("num", m.group(1)))
        elif m.group(2):
            tokens.append(("name", m.group(2)))
        elif m.group(3):
            tokens.append(("op", m.group(3)))
        pos = m.end()
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text = self.next()
        if text != value:
            raise TimeFunctionSyntaxError(
                f"expected {value!r} but found {text!r} in {self.text!r}")

    def parse(self) -> TimeFunction:
        f = self.expr()
        if self.peek()[0] != "end":
            raise TimeFunctionSyntaxError(
                f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return f

    def expr(self) -> TimeFunction:
        f = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.next()[1]
            g = self.term()
            f = add(f, g if op == "+" else scale(-1.0, g))
        return f

    def term(self) -> TimeFunction:
        f = self.factor()
        while self.peek() == ("op", "*"):
            self.next()
            f = multiply(f, self.factor())
        return f

    def factor(self) -> TimeFunction:
        if self.peek() == ("op", "-"):
            self.next()
            return scale(-1.0, self.factor())
        return self.atom()

    def atom(self) -> TimeFunction:
        kind, text = self.next()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text == "pi":
                return Const(math.pi)
            if text == "t":
                return Linear(1.0)
            if text in ("sin", "cos"):
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _sinusoid_of(text, arg)
            raise TimeFunctionSyntaxError(f"unknown name {text!r} in {self.text!r}")
        if (kind, text) == ("op", "("):
            inner = self.expr()
            self.expect(")")
            return inner
        raise TimeFunctionSyntaxError(f"unexpected token {text!r} in {self.text!r}")


def _sinusoid_of(kind: str, arg: TimeFunction) -> TimeFunction:
    """sin/cos of an argument that must be affine in t."""
    if isinstance(arg, Const):
        return _trig(kind, 0.0, arg.value)
    if isinstance(arg, Linear):
        return _trig(kind, arg.slope, arg.intercept)
    raise ClosedFamilyError(
        f"sinusoid arguments must be affine in t, got {arg}")


def parse(text: str) -> TimeFunction:
    """Parse the config-file grammar into a TimeFunction."""
    stripped = text.strip()
    if len(stripped) >= 2 and stripped[0] == stripped[-1] and stripped[0] in "\"'":
        stripped = stripped[1:-1]
    if not stripped:
        raise TimeFunctionSyntaxError("empty time-function expression")
    return _Parser(stripped).parse()
