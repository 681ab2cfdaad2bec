"""Contact structures, Reeb fields, Jacobi brackets and Jacobian vector fields.

Conventions (all matrices are in the chart's coordinate order):

* ``w = d(theta)`` with ``w_ij = d_i theta_j - d_j theta_i``.
* The Reeb field solves ``i_G w = 0`` and ``theta(G) = 1``.
* The bivector is ``L(a, b) = w(#a, #b)`` where ``#`` inverts the bundle map
  ``X -> i_X w + theta(X) theta``; this gives ``L(theta, .) = 0`` and the
  Jacobi pair ``(L, G)``. In Darboux form ``theta = dW + P dQ`` it reads
  ``L = d/dP ^ (d/dQ - P d/dW)``, so ``[P, Q]_J = 1``.
* ``[f, g]_J = L(df, dg) + f G(g) - g G(f)`` and ``X_f = L(df, .) + f G``.

Scalar arguments ``f``/``g`` may be symbolic expressions (exact gradients) or
plain callables on coordinate arrays (central differences).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Union

import numpy as np

from .errors import DegeneracyError, PreconditionError
from .expression import ZERO, Chart, Expression, add, compile_many, const, coords_of, differentiate, div, evaluate_at, mul, sub
from .forms import Bivector, OneForm, TwoForm, VectorField, exterior_derivative

ScalarFunction = Union[Expression, Callable[[np.ndarray], float]]

RESIDUAL_TOL = 1e-8
FD_STEP = 1e-5
GRAD_STEP = 1e-3


def fd_steps(x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    return h * np.maximum(1.0, np.abs(x))


@lru_cache(maxsize=4096)
def _symbolic_gradient(f: Expression, coords: tuple[str, ...]):
    return compile_many([differentiate(f, c) for c in coords], coords)


def scalar_value(f: ScalarFunction, chart: Chart, x) -> float:
    if isinstance(f, Expression):
        return evaluate_at(f, chart.coords, x)
    return float(f(np.asarray(x, dtype=float)))


def scalar_gradient(f: ScalarFunction, chart: Chart, x, h: float = GRAD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if isinstance(f, Expression):
        return _symbolic_gradient(f, chart.coords)(x)
    # callables are often brackets computed by differences themselves, so a
    # fourth-order stencil with a wider step keeps nested brackets accurate
    steps = fd_steps(x, h)
    grad = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = steps[i]
        grad[i] = (8 * (f(x + e) - f(x - e)) - (f(x + 2 * e) - f(x - 2 * e))) / (12 * steps[i])
    return grad


def field_jacobian(X: Callable[[np.ndarray], np.ndarray], x, h: float = FD_STEP) -> np.ndarray:
    """``J[i, j] = d_j X^i`` by central differences."""
    x = np.asarray(x, dtype=float)
    steps = fd_steps(x, h)
    cols = []
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += steps[j]
        xm[j] -= steps[j]
        cols.append((np.asarray(X(xp)) - np.asarray(X(xm))) / (2 * steps[j]))
    return np.column_stack(cols)


def commutator(X, Y, P, h: float = FD_STEP) -> np.ndarray:
    """Lie bracket ``[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i`` at a point."""
    x = coords_of(P)
    fx = X.at if isinstance(X, VectorField) else X
    fy = Y.at if isinstance(Y, VectorField) else Y
    return field_jacobian(fy, x, h) @ fx(x) - field_jacobian(fx, x, h) @ fy(x)


@dataclass(frozen=True)
class PointStructure:
    """Contact data evaluated at one point."""

    theta: np.ndarray
    omega: np.ndarray
    reeb: np.ndarray
    bivector: np.ndarray


class ContactStructure:
    """Contact 1-form with its 2-form, Reeb field and Jacobi bivector.

    Reeb field and bivector are computed pointwise by dense linear algebra
    unless closed forms are attached (``reeb=``, ``bivector=``).
    """

    def __init__(self, theta: OneForm, omega: TwoForm | None = None,
                 reeb: VectorField | None = None, bivector: Bivector | None = None, name: str = ""):
        self.chart = theta.chart
        self.theta = theta
        self.omega = exterior_derivative(theta) if omega is None else omega
        self.reeb = reeb
        self.bivector = bivector
        self.name = name or self.chart.name

    @property
    def dim(self) -> int:
        return self.chart.dim

    def __repr__(self):
        closed = [k for k, v in (("reeb", self.reeb), ("bivector", self.bivector)) if v is not None]
        return f"ContactStructure({self.name}, dim={self.dim}, closed forms={closed})"

    def _x(self, P):
        return coords_of(P, self.chart)

    def theta_at(self, P) -> np.ndarray:
        return self.theta.at(self._x(P))

    def omega_at(self, P) -> np.ndarray:
        return self.omega.at(self._x(P))

    def solve_reeb(self, P) -> np.ndarray:
        """Least-squares solve of ``i_G w = 0, theta(G) = 1`` with residual check."""
        x = self._x(P)
        th, om = self.theta_at(x), self.omega_at(x)
        A = np.vstack([om.T, th])
        b = np.zeros(self.dim + 1)
        b[-1] = 1.0
        G, *_ = np.linalg.lstsq(A, b, rcond=None)
        res = np.max(np.abs(A @ G - b))
        if res > RESIDUAL_TOL:
            raise DegeneracyError(f"no Reeb field at {x.tolist()} (residual {res:.3g}); contact condition fails")
        self._check_contact(th, om, x)
        return G

    def _check_contact(self, th, om, x):
        F = om + np.outer(th, th)
        s = np.linalg.svd(F, compute_uv=False)
        if s[-1] <= 1e-10 * max(1.0, s[0]):
            raise DegeneracyError(
                f"contact condition fails at {x.tolist()}: theta ^ (d theta)^n vanishes (smallest singular value {s[-1]:.3g})")
        return F

    def solve_bivector(self, P) -> np.ndarray:
        x = self._x(P)
        th, om = self.theta_at(x), self.omega_at(x)
        F = self._check_contact(th, om, x)
        G = np.linalg.solve(F, np.eye(self.dim))
        res = np.max(np.abs(F @ G - np.eye(self.dim)))
        if res > RESIDUAL_TOL:
            raise DegeneracyError(f"bivector solve residual {res:.3g} at {x.tolist()}")
        lam = G @ om @ G.T
        return 0.5 * (lam - lam.T)

    def reeb_at(self, P) -> np.ndarray:
        if self.reeb is not None:
            return self.reeb.at(self._x(P))
        return self.solve_reeb(P)

    def bivector_at(self, P) -> np.ndarray:
        if self.bivector is not None:
            return self.bivector.at(self._x(P))
        return self.solve_bivector(P)

    def at(self, P) -> PointStructure:
        x = self._x(P)
        return PointStructure(self.theta_at(x), self.omega_at(x), self.reeb_at(x), self.bivector_at(x))

    def symbolic(self) -> tuple[VectorField, Bivector] | None:
        """Closed-form ``(G, L)`` when available: attached ones, or derived on 3-dimensional charts."""
        if "_symbolic" not in self.__dict__:
            reeb, lam = self.reeb, self.bivector
            if self.dim == 3 and (reeb is None or lam is None):
                G3, L3 = _closed_form_3d(self.theta, self.omega)
                reeb = G3 if reeb is None else reeb
                lam = L3 if lam is None else lam
            ok = reeb is not None and reeb.is_symbolic and lam is not None
            self._symbolic = (reeb, lam) if ok else None
        return self._symbolic

    def reeb_field(self) -> VectorField:
        if self.reeb is not None:
            return self.reeb
        return VectorField(self.chart, func=self.solve_reeb, name="reeb")

    def reeb_residuals(self, P) -> tuple[float, float]:
        """``(|theta(G) - 1|, max |i_G w|)`` at a point."""
        s = self.at(P)
        return abs(s.theta @ s.reeb - 1.0), float(np.max(np.abs(s.reeb @ s.omega)))

    def annihilation_residual(self, P) -> float:
        """``max |L(theta, .)|``."""
        s = self.at(P)
        return float(np.max(np.abs(s.theta @ s.bivector)))

    def contact_rank(self, P) -> int:
        x = self._x(P)
        return int(np.linalg.matrix_rank(np.column_stack([self.omega_at(x), self.theta_at(x)]), tol=1e-10))


_EPS = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}


def _closed_form_3d(theta: OneForm, omega: TwoForm) -> tuple[VectorField, Bivector]:
    """On a 3-chart ``w^k = eps^{kij} w_ij / 2``; ``G = w / theta(w)`` and ``L^{ij} = eps^{ijk} theta_k / theta(w)``."""
    chart = theta.chart
    axial = [ZERO] * 3
    for (k, i, j), sign in _EPS.items():
        if i < j:
            axial[k] = add(axial[k], mul(const(sign), omega.entry(i, j)))
    norm = ZERO
    for t, a in zip(theta.coeffs, axial):
        norm = add(norm, mul(t, a))
    reeb = VectorField(chart, [div(a, norm) for a in axial], name="reeb")
    upper = {}
    for (i, j, k), sign in _EPS.items():
        if i < j and theta.coeffs[k] != ZERO:
            upper[(i, j)] = div(mul(const(sign), theta.coeffs[k]), norm)
    return reeb, Bivector(chart, upper)


def bracket_expression(f: Expression, g: Expression, C: "ContactStructure") -> Expression | None:
    """``[f, g]_J`` as an expression, or None when the structure has no closed form."""
    sym = C.symbolic()
    if sym is None:
        return None
    reeb, lam = sym
    coords = C.chart.coords
    df = [differentiate(f, c) for c in coords]
    dg = [differentiate(g, c) for c in coords]
    total = ZERO
    for (i, j), e in lam.upper.items():
        total = add(total, mul(e, sub(mul(df[i], dg[j]), mul(df[j], dg[i]))))
    for G, a, b in zip(reeb.components, df, dg):
        total = add(total, mul(G, sub(mul(f, b), mul(g, a))))
    return total


def build_contact_structure(theta: OneForm, probe=None, reeb: VectorField | None = None,
                            bivector: Bivector | None = None, name: str = "") -> ContactStructure:
    """Build the contact structure of ``theta``; the chart must be odd-dimensional.

    When ``probe`` is given the contact condition is checked there.
    """
    if theta.chart.dim % 2 != 1:
        raise PreconditionError(f"contact charts are odd-dimensional; {theta.chart.name!r} has dimension {theta.chart.dim}")
    C = ContactStructure(theta, reeb=reeb, bivector=bivector, name=name)
    if probe is not None:
        C.solve_reeb(probe)
        C.solve_bivector(probe)
    return C


def jacobi_bracket(f: ScalarFunction, g: ScalarFunction, C: ContactStructure, P) -> float:
    x = coords_of(P, C.chart)
    s = C.at(x)
    df = scalar_gradient(f, C.chart, x)
    dg = scalar_gradient(g, C.chart, x)
    fv, gv = scalar_value(f, C.chart, x), scalar_value(g, C.chart, x)
    return float(df @ s.bivector @ dg + fv * (s.reeb @ dg) - gv * (s.reeb @ df))


def bracket_function(f: ScalarFunction, g: ScalarFunction, C: ContactStructure) -> ScalarFunction:
    """``[f, g]_J`` for nesting: an expression when possible, else a pointwise callable."""
    if isinstance(f, Expression) and isinstance(g, Expression):
        e = bracket_expression(f, g, C)
        if e is not None:
            return e
    return lambda x: jacobi_bracket(f, g, C, x)


def jacobian_vector_field(f: ScalarFunction, C: ContactStructure) -> VectorField:
    """``X_f = L(df, .) + f G`` as a pointwise field."""

    def X(x):
        s = C.at(x)
        return scalar_gradient(f, C.chart, x) @ s.bivector + scalar_value(f, C.chart, x) * s.reeb

    return VectorField(C.chart, func=X, name="X_f")


def lie_derivative(X: VectorField, f: ScalarFunction, P) -> float:
    x = coords_of(P, X.chart)
    return float(X.at(x) @ scalar_gradient(f, X.chart, x))


@dataclass(frozen=True)
class InvarianceCheck:
    invariant: bool
    residual: float

    def __bool__(self):
        return self.invariant


def check_is_invariant(f: ScalarFunction, X: VectorField, sample: Iterable, tol: float = RESIDUAL_TOL) -> InvarianceCheck:
    sample = list(sample)
    if not sample:
        raise PreconditionError("sample must be nonempty")
    res = max(abs(lie_derivative(X, f, P)) for P in sample)
    return InvarianceCheck(res < tol, res)
