"""Scalar expression language over named chart coordinates.

Expressions are immutable trees built from constants, coordinates, the four
arithmetic operations, integer powers and the functions ``sqrt``, ``sin``,
``cos``, ``exp`` and ``log``. They can be parsed from text, printed back,
differentiated exactly and evaluated at chart points.

Grammar (unary minus binds tighter than ``^``, so ``-q^2`` means ``(-q)^2``)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' base
"""
from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ChartMismatchError,
    DomainError,
    ExpressionSyntaxError,
    UnknownVariableError,
)

FUNCTIONS = ("sqrt", "sin", "cos", "exp", "log")


# ---------------------------------------------------------------------------
# charts and points


@dataclass(frozen=True)
class Chart:
    """A coordinate chart: ordered coordinate names plus derived symbols.

    ``derived`` maps extra identifiers (e.g. ``p0`` or ``m`` on the mass shell)
    to expressions over the coordinates; the parser substitutes them.
    """

    name: str
    coords: tuple[str, ...]
    derived: Mapping[str, "Expression"] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"duplicate coordinate names in chart {self.name!r}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        try:
            return self.coords.index(name)
        except ValueError:
            raise UnknownVariableError(name) from None

    def point(self, values=None, **named) -> "ChartPoint":
        """Build a point either from a sequence or from keyword coordinates."""
        if values is None:
            missing = [c for c in self.coords if c not in named]
            if missing:
                raise ValueError(f"missing coordinates {missing}")
            extra = set(named) - set(self.coords)
            if extra:
                raise UnknownVariableError(sorted(extra)[0])
            values = [named[c] for c in self.coords]
        return ChartPoint(self, np.asarray(values, dtype=float))


@dataclass(frozen=True, eq=False)
class ChartPoint:
    chart: Chart
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.chart.dim,):
            raise ValueError(f"point has {v.size} entries, chart {self.chart.name!r} has dimension {self.chart.dim}")
        if not np.all(np.isfinite(v)):
            raise ValueError("chart point entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.chart.index(name)])

    def as_dict(self) -> dict[str, float]:
        return {c: float(v) for c, v in zip(self.chart.coords, self.values)}

    def __repr__(self):
        inner = ", ".join(f"{c}={v:.6g}" for c, v in zip(self.chart.coords, self.values))
        return f"ChartPoint({self.chart.name}: {inner})"


def coords_of(P, chart: Chart | None = None) -> np.ndarray:
    """Coordinate array of a ChartPoint or array-like, checking the chart when known."""
    if isinstance(P, ChartPoint):
        if chart is not None and P.chart.coords != chart.coords:
            raise ChartMismatchError(f"point on chart {P.chart.name!r}, expected {chart.name!r}")
        return P.values
    x = np.asarray(P, dtype=float)
    if chart is not None and x.shape != (chart.dim,):
        raise ChartMismatchError(f"expected {chart.dim} coordinates, got shape {x.shape}")
    return x


# ---------------------------------------------------------------------------
# expression nodes


class Expression:
    __slots__ = ()

    def variables(self) -> frozenset[str]:
        raise NotImplementedError

    def __str__(self):
        return to_text(self)

    # operator sugar, used heavily when building forms by hand
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)


@dataclass(frozen=True)
class Const(Expression):
    value: Fraction | float

    def variables(self):
        return frozenset()


@dataclass(frozen=True)
class Var(Expression):
    name: str

    def variables(self):
        return frozenset((self.name,))


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression

    def variables(self):
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def variables(self):
        return self.base.variables()


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def variables(self):
        return self.arg.variables()


@dataclass(frozen=True)
class Func(Expression):
    name: str
    arg: Expression

    def variables(self):
        return self.arg.variables()


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(value) -> Const:
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Const(Fraction(value))
    value = float(value)
    if value.is_integer() and abs(value) < 2**53:
        return Const(Fraction(int(value)))
    return Const(value)


def var(name: str) -> Var:
    return Var(name)


def _lift(x) -> Expression:
    return x if isinstance(x, Expression) else const(x)


def _is_const(e, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _fold(a, b, op):
    # exact when both are rationals, otherwise float; None leaves the node unfolded
    if not (isinstance(a, Fraction) and isinstance(b, Fraction)):
        a, b = float(a), float(b)
    if op == "/" and b == 0:
        return None
    return _OPS[op](a, b)


_OPS = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv}


# smart constructors: constant folding and unit/zero elimination only


def add(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return const(_fold(a.value, b.value, "+"))
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return BinOp("+", a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return const(_fold(a.value, b.value, "-"))
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        return const(_fold(a.value, b.value, "*"))
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return neg(b)
    if _is_const(b, -1):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expression, b: Expression) -> Expression:
    if _is_const(a) and _is_const(b):
        folded = _fold(a.value, b.value, "/")
        if folded is not None:
            return const(folded)
    if _is_const(b, 1):
        return a
    if _is_const(a, 0) and not _is_const(b, 0):
        return ZERO
    return BinOp("/", a, b)


def power(a: Expression, n: int) -> Expression:
    if int(n) != n:
        raise ValueError("only integer exponents are supported")
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if _is_const(a) and isinstance(a.value, Fraction) and (n > 0 or a.value != 0):
        return const(a.value**n)
    return Pow(a, n)


def neg(a: Expression) -> Expression:
    if isinstance(a, Const):
        return const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def func(name: str, a: Expression) -> Expression:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    return Func(name, a)


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions (used for derived chart symbols and pullbacks)."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, BinOp):
        l, r = substitute(e.left, mapping), substitute(e.right, mapping)
        return {"+": add, "-": sub, "*": mul, "/": div}[e.op](l, r)
    if isinstance(e, Pow):
        return power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Neg):
        return neg(substitute(e.arg, mapping))
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, mapping))
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + 1 + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[col - 1]!r}", col)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text, chart):
        self.tokens = _tokenize(text)
        self.i = 0
        self.chart = chart

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, col = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", col)

    def parse(self):
        e = self.expr()
        kind, text, col = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {text!r}", col)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self):
        b = self.base()
        if self.peek()[1] == "^":
            self.take()
            kind, text, col = self.take()
            if kind != "number" or not text.isdigit():
                raise ExpressionSyntaxError("exponent must be a non-negative integer", col)
            return power(b, int(text))
        return b

    def base(self):
        kind, text, col = self.take()
        if kind == "number":
            if re.fullmatch(r"\d+", text):
                return const(int(text))
            return const(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            return self.identifier(text)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if text == "-":
            return neg(self.base())
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(f"unexpected {found}", col)

    def identifier(self, name):
        if self.chart is None:
            return Var(name)
        if name in self.chart.coords:
            return Var(name)
        if name in self.chart.derived:
            return self.chart.derived[name]
        raise UnknownVariableError(name)


def parse_expression(text: str, chart: Chart | None = None) -> Expression:
    """Parse ``text``; identifiers must be coordinates or derived symbols of ``chart``."""
    return _Parser(text, chart).parse()


# ---------------------------------------------------------------------------
# printing


def _const_text(v):
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator) if v >= 0 else f"(-{-v.numerator})"
        sign = "-" if v < 0 else ""
        return f"({sign}{abs(v.numerator)}/{v.denominator})"
    text = repr(float(v))
    if not math.isfinite(v):
        raise ValueError("non-finite constants cannot be printed")
    return f"(-{text[1:]})" if v < 0 else text


def to_text(e: Expression) -> str:
    """Fully parenthesized text that parses back to an identically evaluating tree."""
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)})^{e.exponent}" if e.exponent >= 0 else f"(1 / ({to_text(e.base)})^{-e.exponent})"
    if isinstance(e, Neg):
        return f"(-({to_text(e.arg)}))"
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e: Expression, x: str, chart: Chart | None = None) -> Expression:
    """Exact partial derivative of ``e`` with respect to coordinate ``x``."""
    if chart is not None and x not in chart.coords:
        raise UnknownVariableError(x)
    return _diff(e, x)


def _diff(e, x):
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == x else ZERO
    if x not in e.variables():
        return ZERO
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = _diff(a, x), _diff(b, x)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, b), mul(a, db))
        if db == ZERO:
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if isinstance(e, Pow):
        n = e.exponent
        return mul(mul(const(n), power(e.base, n - 1)), _diff(e.base, x))
    if isinstance(e, Neg):
        return neg(_diff(e.arg, x))
    if isinstance(e, Func):
        a = e.arg
        da = _diff(a, x)
        if e.name == "sqrt":
            return div(da, mul(const(2), e))
        if e.name == "sin":
            return mul(Func("cos", a), da)
        if e.name == "cos":
            return neg(mul(Func("sin", a), da))
        if e.name == "exp":
            return mul(e, da)
        if e.name == "log":
            return div(da, a)
    raise TypeError(type(e))


def gradient(e: Expression, chart: Chart) -> tuple[Expression, ...]:
    return tuple(_diff(e, c) for c in chart.coords)


# ---------------------------------------------------------------------------
# evaluation

_PY_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "exp": math.exp, "log": math.log}


def _codegen(e, index):
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x[{index[e.name]}]"
    if isinstance(e, BinOp):
        return f"({_codegen(e.left, index)} {e.op} {_codegen(e.right, index)})"
    if isinstance(e, Pow):
        return f"({_codegen(e.base, index)} ** {e.exponent})"
    if isinstance(e, Neg):
        return f"(-{_codegen(e.arg, index)})"
    if isinstance(e, Func):
        return f"_{e.name}({_codegen(e.arg, index)})"
    raise TypeError(type(e))


_compiled_cache: dict = {}


def compile_expression(e: Expression, coords: Sequence[str]):
    """Return a fast ``f(list_of_floats) -> float`` for ``e`` on the given coordinate order.

    The compiled function raises plain Python arithmetic errors; :func:`evaluate`
    maps those to :class:`DomainError` with the offending subexpression.
    """
    coords = tuple(coords)
    key = (e, coords)
    fn = _compiled_cache.get(key)
    if fn is None:
        index = {c: i for i, c in enumerate(coords)}
        missing = e.variables() - set(index)
        if missing:
            raise UnknownVariableError(sorted(missing)[0])
        namespace = {f"_{k}": v for k, v in _PY_FUNCS.items()}
        fn = eval(f"lambda x: {_codegen(e, index)}", namespace)  # noqa: S307 - generated from a closed grammar
        if len(_compiled_cache) > 50_000:
            _compiled_cache.clear()
        _compiled_cache[key] = fn
    return fn


def compile_many(exprs: Sequence[Expression], coords: Sequence[str]):
    """Compile several expressions into one ``f(x) -> ndarray`` with domain-error reporting."""
    coords = tuple(coords)
    exprs = tuple(exprs)
    index = {c: i for i, c in enumerate(coords)}
    for e in exprs:
        missing = e.variables() - set(index)
        if missing:
            raise UnknownVariableError(sorted(missing)[0])
    if not exprs:
        return lambda x: np.zeros(0)
    namespace = {f"_{k}": v for k, v in _PY_FUNCS.items()}
    body = ", ".join(_codegen(e, index) for e in exprs)
    fast = eval(f"lambda x: ({body},)", namespace)  # noqa: S307 - generated from a closed grammar

    def fn(x):
        xs = [float(v) for v in x]
        try:
            out = np.array(fast(xs), dtype=float)
        except (ZeroDivisionError, ValueError, OverflowError):
            out = None
        if out is None or not np.all(np.isfinite(out)):
            return np.array([evaluate_at(e, coords, xs) for e in exprs])
        return out

    return fn


def _locate_domain_error(e, env):
    """Slow recursive evaluation that pinpoints the failing node."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, BinOp):
        a, b = _locate_domain_error(e.left, env), _locate_domain_error(e.right, env)
        if e.op == "/" and b == 0.0:
            raise DomainError(f"division by zero in {to_text(e)}", e)
        r = {"+": a + b, "-": a - b, "*": a * b, "/": a / b if b else 0.0}[e.op]
    elif isinstance(e, Pow):
        a = _locate_domain_error(e.base, env)
        if a == 0.0 and e.exponent < 0:
            raise DomainError(f"zero to a negative power in {to_text(e)}", e)
        try:
            r = a**e.exponent
        except OverflowError:
            raise DomainError(f"overflow in {to_text(e)}", e) from None
    elif isinstance(e, Neg):
        r = -_locate_domain_error(e.arg, env)
    elif isinstance(e, Func):
        a = _locate_domain_error(e.arg, env)
        if e.name == "sqrt" and a < 0:
            raise DomainError(f"sqrt of negative value {a!r} in {to_text(e)}", e)
        if e.name == "log" and a <= 0:
            raise DomainError(f"log of non-positive value {a!r} in {to_text(e)}", e)
        try:
            r = _PY_FUNCS[e.name](a)
        except (OverflowError, ValueError):
            raise DomainError(f"{e.name} out of range in {to_text(e)}", e) from None
    else:
        raise TypeError(type(e))
    if not math.isfinite(r):
        raise DomainError(f"non-finite value in {to_text(e)}", e)
    return r


def evaluate_at(e: Expression, coords: Sequence[str], x) -> float:
    """Evaluate on a raw coordinate vector ``x`` ordered as ``coords``."""
    fn = compile_expression(e, coords)
    xs = [float(v) for v in x]
    try:
        r = fn(xs)
    except (ZeroDivisionError, ValueError, OverflowError):
        _locate_domain_error(e, dict(zip(coords, xs)))
        raise DomainError(f"evaluation failed in {to_text(e)}", e)  # pragma: no cover
    if not math.isfinite(r):
        _locate_domain_error(e, dict(zip(coords, xs)))
    return r


def evaluate(e: Expression, P: ChartPoint) -> float:
    missing = e.variables() - set(P.chart.coords)
    if missing:
        raise ChartMismatchError(f"variable {sorted(missing)[0]!r} is not a coordinate of chart {P.chart.name!r}")
    return evaluate_at(e, P.chart.coords, P.values)
