"""Chart-level tensors: one-forms, two-forms, bivectors and vector fields.

Symbolic tensors hold :class:`~contactjacobi.expression.Expression`
coefficients; vector fields may instead wrap a pointwise callable (fields
obtained by solving linear systems have no closed form).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ChartMismatchError
from .expression import (
    ZERO,
    Chart,
    Expression,
    _lift,
    add,
    coords_of,
    compile_many,
    differentiate,
    evaluate_at,
    mul,
    neg,
    sub,
    substitute,
)


def _compiled(obj, exprs):
    """Lazily compiled evaluator for ``exprs``, cached on the (frozen) object."""
    fn = obj.__dict__.get("_fn")
    if fn is None:
        fn = compile_many(list(exprs), obj.chart.coords)
        object.__setattr__(obj, "_fn", fn)
    return fn


def _antisymmetric(obj, x) -> np.ndarray:
    n = obj.chart.dim
    m = np.zeros((n, n))
    if obj.upper:
        keys = list(obj.upper)
        vals = _compiled(obj, [obj.upper[k] for k in keys])(x)
        for (i, j), v in zip(keys, vals):
            m[i, j] = v
            m[j, i] = -v
    return m


@dataclass(frozen=True)
class OneForm:
    chart: Chart
    coeffs: tuple[Expression, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(_lift(c) for c in self.coeffs))
        if len(self.coeffs) != self.chart.dim:
            raise ValueError("one-form needs one coefficient per coordinate")

    @classmethod
    def from_dict(cls, chart: Chart, coeffs: Mapping[str, Expression]) -> "OneForm":
        unknown = set(coeffs) - set(chart.coords)
        if unknown:
            raise ChartMismatchError(f"{sorted(unknown)} are not coordinates of {chart.name!r}")
        return cls(chart, tuple(_lift(coeffs.get(c, ZERO)) for c in chart.coords))

    def at(self, P) -> np.ndarray:
        return _compiled(self, self.coeffs)(coords_of(P, self.chart))

    def __getitem__(self, name: str) -> Expression:
        return self.coeffs[self.chart.index(name)]


@dataclass(frozen=True)
class TwoForm:
    """Antisymmetric coefficient matrix; ``omega(X, Y) = X^i w_ij Y^j``."""

    chart: Chart
    upper: Mapping[tuple[int, int], Expression]  # entries i < j only

    def entry(self, i: int, j: int) -> Expression:
        if i == j:
            return ZERO
        if i < j:
            return self.upper.get((i, j), ZERO)
        return neg(self.upper.get((j, i), ZERO))

    def matrix(self) -> list[list[Expression]]:
        n = self.chart.dim
        return [[self.entry(i, j) for j in range(n)] for i in range(n)]

    def at(self, P) -> np.ndarray:
        return _antisymmetric(self, coords_of(P, self.chart))


@dataclass(frozen=True)
class Bivector:
    """Antisymmetric ``L^{ij}``; ``L(alpha, beta) = alpha_i L^{ij} beta_j``."""

    chart: Chart
    upper: Mapping[tuple[int, int], Expression]

    @classmethod
    def wedge_sum(cls, chart: Chart, terms: Sequence[tuple[Mapping[str, Expression], Mapping[str, Expression]]]):
        """Sum of wedge products ``A ^ B`` with ``(A ^ B)(a, b) = a(A) b(B) - a(B) b(A)``."""
        n = chart.dim
        full = [[ZERO] * n for _ in range(n)]
        for A, B in terms:
            for ka, va in A.items():
                for kb, vb in B.items():
                    i, j = chart.index(ka), chart.index(kb)
                    t = mul(_lift(va), _lift(vb))
                    full[i][j] = add(full[i][j], t)
                    full[j][i] = sub(full[j][i], t)
        return cls(chart, {(i, j): full[i][j] for i in range(n) for j in range(i + 1, n) if full[i][j] != ZERO})

    def at(self, P) -> np.ndarray:
        return _antisymmetric(self, coords_of(P, self.chart))


class VectorField:
    """Vector field on a chart, symbolic (component expressions) or pointwise (callable)."""

    def __init__(self, chart: Chart, components: Sequence[Expression] | None = None,
                 func: Callable[[np.ndarray], np.ndarray] | None = None, name: str = ""):
        if (components is None) == (func is None):
            raise ValueError("give exactly one of components or func")
        self.chart = chart
        self.name = name
        self.components = None if components is None else tuple(_lift(c) for c in components)
        if self.components is not None and len(self.components) != chart.dim:
            raise ValueError("vector field needs one component per coordinate")
        self._func = func
        self._compiled = None

    @classmethod
    def from_dict(cls, chart: Chart, comps: Mapping[str, Expression], name: str = "") -> "VectorField":
        unknown = set(comps) - set(chart.coords)
        if unknown:
            raise ChartMismatchError(f"{sorted(unknown)} are not coordinates of {chart.name!r}")
        return cls(chart, [_lift(comps.get(c, ZERO)) for c in chart.coords], name=name)

    @property
    def is_symbolic(self) -> bool:
        return self.components is not None

    def at(self, P) -> np.ndarray:
        x = coords_of(P, self.chart)
        if self.components is not None:
            if self._compiled is None:
                self._compiled = compile_many(self.components, self.chart.coords)
            return self._compiled(x)
        return np.asarray(self._func(np.asarray(x, dtype=float)), dtype=float)

    def __call__(self, x) -> np.ndarray:
        return self.at(x)

    def scaled(self, factor: Expression) -> "VectorField":
        if self.components is None:
            raise TypeError("only symbolic fields can be scaled symbolically")
        return VectorField(self.chart, [mul(factor, c) for c in self.components])

    def __repr__(self):
        if self.components is None:
            return f"VectorField({self.chart.name}, pointwise {self.name})"
        parts = [f"{c}: {e}" for c, e in zip(self.chart.coords, self.components) if e != ZERO]
        return f"VectorField({self.chart.name}; " + ", ".join(parts) + ")"


def exterior_derivative(theta: OneForm) -> TwoForm:
    """``w_ij = d_i theta_j - d_j theta_i``."""
    chart = theta.chart
    n = chart.dim
    upper = {}
    for i in range(n):
        for j in range(i + 1, n):
            e = sub(differentiate(theta.coeffs[j], chart.coords[i]), differentiate(theta.coeffs[i], chart.coords[j]))
            if e != ZERO:
                upper[(i, j)] = e
    return TwoForm(chart, upper)


def exact_form(f: Expression, chart: Chart) -> OneForm:
    return OneForm(chart, tuple(differentiate(f, c) for c in chart.coords))


def contract(X: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Pointwise interior product ``(i_X w)_j = X^i w_ij``."""
    return X @ omega


def pullback_one_form(alpha: OneForm, source: Chart, mapping: Mapping[str, Expression]) -> OneForm:
    """Pull ``alpha`` back along the map ``source -> alpha.chart`` given coordinatewise.

    ``mapping`` sends each target coordinate to an expression over ``source``.
    """
    target = alpha.chart
    missing = set(target.coords) - set(mapping)
    if missing:
        raise ChartMismatchError(f"map does not define {sorted(missing)}")
    coeffs = []
    for s in source.coords:
        total = ZERO
        for t, a in zip(target.coords, alpha.coeffs):
            total = add(total, mul(substitute(a, mapping), differentiate(mapping[t], s)))
        coeffs.append(total)
    return OneForm(source, tuple(coeffs))


def d_dd_residual(omega: TwoForm, P) -> float:
    """Max |(d w)_ijk| at a point; vanishes for any exact two-form."""
    chart = omega.chart
    x = coords_of(P, chart)
    n = chart.dim
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                e = add(add(differentiate(omega.entry(j, k), chart.coords[i]),
                            differentiate(omega.entry(k, i), chart.coords[j])),
                        differentiate(omega.entry(i, j), chart.coords[k]))
                worst = max(worst, abs(evaluate_at(e, chart.coords, x)))
    return worst
