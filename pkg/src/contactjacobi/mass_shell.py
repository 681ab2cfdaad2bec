"""Relativistic free particle on the mass shell.

The shell ``eta^{mu nu} p_mu p_nu = m^2``, ``p_0 > 0``, with
``eta = diag(+1, -1, -1, -1)``, is charted by ``(u0, u1, u2, u3, p1, p2, p3)``;
``p0 = sqrt(p1^2 + p2^2 + p3^2 + m^2)`` is a derived symbol. Ambient
formulas are pulled back by substituting ``p0``. Upper-index momenta are
``p^mu = eta^{mu nu} p_nu``.

Contact data in closed form:

* ``theta_m = p_mu du^mu``
* ``G = (p^nu / m^2) d/du^nu``
* ``L = (delta_j^nu - p_j p^nu / m^2) d/dp_j ^ d/du^nu`` (tangent to the shell)
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .contact import ContactStructure, build_contact_structure, jacobi_bracket, scalar_gradient
from .errors import PreconditionError
from .expression import ZERO, Chart, ChartPoint, Expression, coords_of, const, evaluate_at, func, var
from .extended import integrate_flow
from .forms import Bivector, OneForm, VectorField

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
U_NAMES = ("u0", "u1", "u2", "u3")
P_NAMES = ("p1", "p2", "p3")
COORDS = U_NAMES + P_NAMES


def eta(mu: int) -> int:
    return 1 if mu == 0 else -1


@dataclass(frozen=True)
class MassShellSpec:
    mass: float

    def __post_init__(self):
        m = float(self.mass)
        if not (np.isfinite(m) and m > 0):
            raise PreconditionError(f"mass must be positive (got {self.mass}); the massless shell is excluded")
        object.__setattr__(self, "mass", m)

    @cached_property
    def chart(self) -> Chart:
        m = const(self.mass)
        p0 = func("sqrt", var("p1") ** 2 + var("p2") ** 2 + var("p3") ** 2 + m**2)
        return Chart(f"mass-shell(m={self.mass:g})", COORDS, {"p0": p0, "m": m})

    @property
    def m2(self) -> Expression:
        return const(self.mass) ** 2

    # index gymnastics on the chart

    def p_lower(self, mu: int) -> Expression:
        return self.chart.derived["p0"] if mu == 0 else var(P_NAMES[mu - 1])

    def p_upper(self, mu: int) -> Expression:
        return self.p_lower(mu) if mu == 0 else -self.p_lower(mu)

    def u_upper(self, mu: int) -> Expression:
        return var(U_NAMES[mu])

    def u_lower(self, mu: int) -> Expression:
        return self.u_upper(mu) if mu == 0 else -self.u_upper(mu)

    def sample(self, rng, n: int, u_box: float = 3.0, p_box: float = 2.0) -> list[ChartPoint]:
        return [embed(rng.uniform(-u_box, u_box, 4), rng.uniform(-p_box, p_box, 3), self.mass) for _ in range(n)]


def p0_value(p_spatial, m: float) -> float:
    p = np.asarray(p_spatial, dtype=float)
    return float(np.sqrt(p @ p + m * m))


def embed(u, p_spatial, m: float) -> ChartPoint:
    """Chart point for position ``u^mu`` and covariant spatial momenta ``p_j``."""
    spec = MassShellSpec(m)
    u = np.asarray(u, dtype=float).ravel()
    p = np.asarray(p_spatial, dtype=float).ravel()
    if u.size != 4 or p.size != 3:
        raise PreconditionError("need 4 position and 3 momentum components")
    return spec.chart.point(np.concatenate([u, p]))


def four_momentum(P, m: float) -> np.ndarray:
    """Covariant ``p_mu`` at a chart point (``p_0`` from the shell relation)."""
    x = coords_of(P)
    return np.concatenate([[p0_value(x[4:], m)], x[4:]])


def landau_theta(spec: MassShellSpec) -> OneForm:
    """``p_mu du^mu`` pulled back to the shell, i.e. ``p_j du^j + p0 du^0``."""
    return OneForm.from_dict(spec.chart, {U_NAMES[mu]: spec.p_lower(mu) for mu in range(4)})


def landau_field(spec: MassShellSpec) -> VectorField:
    """``d/du^0 - (p_j / p0) d/du^j``."""
    p0 = spec.p_lower(0)
    comps = {"u0": const(1)}
    for j in range(1, 4):
        comps[U_NAMES[j]] = -spec.p_lower(j) / p0
    return VectorField.from_dict(spec.chart, comps, name="landau")


def reeb_field(spec: MassShellSpec) -> VectorField:
    return VectorField.from_dict(spec.chart, {U_NAMES[nu]: spec.p_upper(nu) / spec.m2 for nu in range(4)}, name="reeb")


def bivector(spec: MassShellSpec) -> Bivector:
    terms = []
    for j in range(1, 4):
        B = {}
        for nu in range(4):
            c = spec.p_lower(j) * spec.p_upper(nu) / spec.m2
            B[U_NAMES[nu]] = const(1) - c if nu == j else -c
        terms.append(({P_NAMES[j - 1]: const(1)}, B))
    return Bivector.wedge_sum(spec.chart, terms)


def relativistic_contact(spec: MassShellSpec) -> ContactStructure:
    return build_contact_structure(landau_theta(spec), reeb=reeb_field(spec), bivector=bivector(spec),
                                   name=spec.chart.name)


# ---------------------------------------------------------------------------
# Poincare generators


@dataclass(frozen=True)
class PoincareLabel:
    """Translation ``p_mu`` (``nu is None``) or Lorentz generator ``J_{mu nu}`` with ``mu < nu``."""

    mu: int
    nu: int | None = None

    def __post_init__(self):
        if not 0 <= self.mu <= 3:
            raise PreconditionError(f"index {self.mu} out of range 0..3")
        if self.nu is not None and not (0 <= self.nu <= 3 and self.mu < self.nu):
            raise PreconditionError(f"Lorentz label needs 0 <= mu < nu <= 3 (got {self.mu}, {self.nu})")

    @property
    def is_translation(self) -> bool:
        return self.nu is None

    def __str__(self):
        return f"p{self.mu}" if self.nu is None else f"J{self.mu}{self.nu}"

    @classmethod
    def parse(cls, text: str) -> "PoincareLabel":
        t = text.strip()
        try:
            if t[0] == "p" and len(t) == 2:
                return cls(int(t[1]))
            if t[0] == "J" and len(t) == 3:
                return cls(int(t[1]), int(t[2]))
        except (ValueError, IndexError):
            pass
        raise PreconditionError(f"invalid Poincare label {text!r}; expected p<mu> or J<mu><nu>")


def all_labels() -> list[PoincareLabel]:
    return [PoincareLabel(mu) for mu in range(4)] + [PoincareLabel(a, b) for a, b in combinations(range(4), 2)]


def poincare_function(spec: MassShellSpec, label: PoincareLabel) -> Expression:
    if label.is_translation:
        return spec.p_lower(label.mu)
    mu, nu = label.mu, label.nu
    return spec.u_lower(mu) * spec.p_lower(nu) - spec.u_lower(nu) * spec.p_lower(mu)


def poincare_field(spec: MassShellSpec, label: PoincareLabel) -> VectorField:
    """``d/du^mu`` or ``u_mu d/du^nu - u_nu d/du^mu + p_mu d/dp^nu - p_nu d/dp^mu``.

    ``d/dp^nu = eta_{nu nu} d/dp_nu``; the ``d/dp_0`` part is dropped because
    the field is tangent to the shell and ``p_0`` is not a chart coordinate.
    """
    if label.is_translation:
        return VectorField.from_dict(spec.chart, {U_NAMES[label.mu]: const(1)}, name=str(label))
    mu, nu = label.mu, label.nu
    comps: dict[str, Expression] = {U_NAMES[c]: ZERO for c in range(4)}
    comps[U_NAMES[nu]] = comps[U_NAMES[nu]] + spec.u_lower(mu)
    comps[U_NAMES[mu]] = comps[U_NAMES[mu]] - spec.u_lower(nu)
    if nu != 0:
        comps[P_NAMES[nu - 1]] = comps.get(P_NAMES[nu - 1], ZERO) + eta(nu) * spec.p_lower(mu)
    if mu != 0:
        comps[P_NAMES[mu - 1]] = comps.get(P_NAMES[mu - 1], ZERO) - eta(mu) * spec.p_lower(nu)
    return VectorField.from_dict(spec.chart, comps, name=str(label))


def generator_matrix(label: PoincareLabel) -> np.ndarray:
    """5x5 affine matrix whose linear field ``x -> M x`` is the generator's action on ``u``."""
    M = np.zeros((5, 5))
    if label.is_translation:
        M[label.mu, 4] = 1.0
        return M
    mu, nu = label.mu, label.nu
    # u_mu d/du^nu - u_nu d/du^mu with u_a = eta_aa u^a
    M[nu, mu] += eta(mu)
    M[mu, nu] -= eta(nu)
    return M


@dataclass(frozen=True)
class StructureConstants:
    labels: tuple[PoincareLabel, ...]
    table: np.ndarray  # table[a, b, c]: coefficient of f_c in [f_a, f_b]_J


def structure_constants() -> StructureConstants:
    """Bracket constants derived from 5x5 matrix commutators.

    ``f -> X_f`` is a Lie algebra homomorphism and ``[V_A, V_B] = V_{-[A, B]}``
    for linear fields ``V_A(x) = A x``, so ``[f_a, f_b]_J = -sum_c c_ab^c f_c``
    where ``[M_a, M_b] = sum_c c_ab^c M_c``.
    """
    labels = tuple(all_labels())
    basis = np.array([generator_matrix(l).ravel() for l in labels]).T
    k = len(labels)
    table = np.zeros((k, k, k))
    for a in range(k):
        for b in range(k):
            Ma, Mb = generator_matrix(labels[a]), generator_matrix(labels[b])
            comm = (Ma @ Mb - Mb @ Ma).ravel()
            coef, *_ = np.linalg.lstsq(basis, comm, rcond=None)
            if np.max(np.abs(basis @ coef - comm)) > 1e-12:
                raise AssertionError("matrix commutator left the Poincare span")
            table[a, b] = -np.round(coef, 12)
    return StructureConstants(labels, table)


def closed_form_constants() -> StructureConstants:
    """Textbook bracket relations for the same labels.

    ``[J_mn, J_rs] = eta_nr J_ms - eta_mr J_ns - eta_ns J_mr + eta_ms J_nr``,
    ``[J_mn, p_r] = eta_nr p_m - eta_mr p_n``, ``[p_m, p_n] = 0``.
    """
    labels = tuple(all_labels())
    index = {(l.mu, l.nu): i for i, l in enumerate(labels)}
    k = len(labels)
    table = np.zeros((k, k, k))

    def J(a, b, coef, out):
        if a == b or coef == 0:
            return
        if a < b:
            out[index[(a, b)]] += coef
        else:
            out[index[(b, a)]] -= coef

    def e(a, b):
        return ETA[a, b]

    for i, A in enumerate(labels):
        for j, B in enumerate(labels):
            out = table[i, j]
            if A.is_translation and B.is_translation:
                continue
            if not A.is_translation and B.is_translation:
                m, n, r = A.mu, A.nu, B.mu
                out[index[(m, None)]] += e(n, r)
                out[index[(n, None)]] -= e(m, r)
            elif A.is_translation and not B.is_translation:
                m, n, r = B.mu, B.nu, A.mu
                out[index[(m, None)]] -= e(n, r)
                out[index[(n, None)]] += e(m, r)
            else:
                m, n, r, s = A.mu, A.nu, B.mu, B.nu
                J(m, s, e(n, r), out)
                J(n, s, -e(m, r), out)
                J(m, r, -e(n, s), out)
                J(n, r, e(m, s), out)
    return StructureConstants(labels, table)


@dataclass(frozen=True)
class ClosureEntry:
    a: PoincareLabel
    b: PoincareLabel
    residual: float


def poincare_closure_table(spec: MassShellSpec, sample, constants: StructureConstants | None = None,
                           contact: ContactStructure | None = None) -> list[ClosureEntry]:
    """Max over ``sample`` of ``|[f_a, f_b]_J - sum_c C_ab^c f_c|`` for every pair ``a < b``."""
    sample = [coords_of(P, spec.chart) for P in sample]
    if not sample:
        raise PreconditionError("sample must be nonempty")
    constants = structure_constants() if constants is None else constants
    C = relativistic_contact(spec) if contact is None else contact
    labels = constants.labels
    funcs = [poincare_function(spec, l) for l in labels]
    values = np.array([[evaluate_at(f, spec.chart.coords, x) for f in funcs] for x in sample])
    rows = []
    for a, b in combinations(range(len(labels)), 2):
        worst = 0.0
        for x, vals in zip(sample, values):
            got = jacobi_bracket(funcs[a], funcs[b], C, x)
            worst = max(worst, abs(got - constants.table[a, b] @ vals))
        rows.append(ClosureEntry(labels[a], labels[b], worst))
    return rows


# ---------------------------------------------------------------------------
# Newton-Wigner data and worldlines


@dataclass(frozen=True)
class NewtonWigner:
    Q: np.ndarray
    P: np.ndarray
    T: float


def newton_wigner_functions(spec: MassShellSpec) -> tuple[tuple[Expression, ...], tuple[Expression, ...], Expression]:
    """``Q^j = u^j + p_j u^0 / p0``, ``P_j = p_j``, ``T = p_mu u^mu``."""
    p0 = spec.p_lower(0)
    Q = tuple(spec.u_upper(j) + spec.p_lower(j) * spec.u_upper(0) / p0 for j in range(1, 4))
    P = tuple(spec.p_lower(j) for j in range(1, 4))
    T = ZERO
    for mu in range(4):
        T = T + spec.p_lower(mu) * spec.u_upper(mu)
    return Q, P, T


def newton_wigner(P, m: float) -> NewtonWigner:
    x = coords_of(P)
    u, p = x[:4], x[4:]
    p0 = p0_value(p, m)
    return NewtonWigner(u[1:] + p * u[0] / p0, p.copy(), float(p0 * u[0] + p @ u[1:]))


def reeb_derivative_of_time(spec: MassShellSpec, P) -> float:
    """``L_G T`` at a point."""
    x = coords_of(P, spec.chart)
    _, _, T = newton_wigner_functions(spec)
    return float(reeb_field(spec).at(x) @ scalar_gradient(T, spec.chart, x))


@dataclass(frozen=True)
class ReparamResidual:
    """Per-node residuals: ``dp`` (4 comps of dp_mu/dl) and ``dx`` (projected velocity)."""

    dp: np.ndarray
    dx: np.ndarray
    scale: np.ndarray  # norm of (dx/dl, dp/dl) per node

    @property
    def raw(self) -> float:
        return float(max(np.max(np.abs(self.dp)), np.max(np.abs(self.dx))))

    @property
    def normalized(self) -> np.ndarray:
        r = np.hstack([self.dp, self.dx])
        return r / self.scale[:, None]

    @property
    def max_normalized(self) -> float:
        return float(np.max(np.abs(self.normalized)))


def reparam_el_residual(params, points, m: float) -> ReparamResidual:
    """Residuals of ``dp_mu/dl = 0`` and ``(delta^mu_nu - p^mu p_nu / m^2) dx^nu/dl = 0``.

    ``points`` are chart points (rows ``u0..u3, p1..p3``) sampled at the
    strictly monotone parameters ``params``; derivatives are second-order
    central differences (one-sided at the ends).
    """
    MassShellSpec(m)
    lam = np.asarray(params, dtype=float)
    X = np.asarray([coords_of(P) for P in points], dtype=float)
    if lam.ndim != 1 or len(lam) < 3 or len(X) != len(lam):
        raise PreconditionError("need at least 3 samples with one parameter each")
    if X.shape[1] != 7:
        raise PreconditionError("points must be mass-shell chart points")
    steps = np.diff(lam)
    if np.any(steps == 0) or not (np.all(steps > 0) or np.all(steps < 0)):
        raise PreconditionError("sample parameters must be strictly monotone (no repeated samples)")
    p_cov = np.array([four_momentum(x, m) for x in X])
    xdot = np.gradient(X[:, :4], lam, axis=0, edge_order=2)
    pdot = np.gradient(p_cov, lam, axis=0, edge_order=2)
    p_up = p_cov @ ETA
    # (delta^mu_nu - p^mu p_nu / m^2) xdot^nu
    proj = xdot - p_up * (np.sum(p_cov * xdot, axis=1) / m**2)[:, None]
    scale = np.sqrt(np.sum(xdot**2, axis=1) + np.sum(pdot**2, axis=1))
    if np.any(scale == 0):
        raise PreconditionError("curve is stationary at some sample (zero velocity)")
    return ReparamResidual(pdot, proj, scale)


def straight_worldline(x0, p_spatial, m: float, params) -> list[ChartPoint]:
    """Points ``x(l) = x0 + l p^mu / m`` with constant momentum."""
    x0 = np.asarray(x0, dtype=float)
    p = np.asarray(p_spatial, dtype=float)
    p_up = ETA @ np.concatenate([[p0_value(p, m)], p])
    return [embed(x0 + l * p_up / m, p, m) for l in params]


# ---------------------------------------------------------------------------
# finite Poincare transformations


def generator_combination(spec: MassShellSpec, coeffs: dict) -> VectorField:
    """``sum_a c_a X_a`` for printed generator fields (keys are labels or their names)."""
    comps = [ZERO] * spec.chart.dim
    for key, c in coeffs.items():
        label = key if isinstance(key, PoincareLabel) else PoincareLabel.parse(key)
        X = poincare_field(spec, label)
        comps = [a + float(c) * b for a, b in zip(comps, X.components)]
    return VectorField(spec.chart, comps, name="generator")


class PoincareTransformation:
    """Time-one map of a generator combination, integrated with rk4."""

    def __init__(self, spec: MassShellSpec, coeffs: dict, dt: float = 1e-2):
        self.spec = spec
        self.field = generator_combination(spec, coeffs)
        self.dt = dt

    def __call__(self, x) -> np.ndarray:
        return integrate_flow(self.field, np.asarray(x, dtype=float), (0.0, 1.0), self.dt).points[-1]

    @classmethod
    def random(cls, spec: MassShellSpec, rng, scale: float = 0.5, dt: float = 1e-2) -> "PoincareTransformation":
        return cls(spec, {l: rng.uniform(-scale, scale) for l in all_labels()}, dt)


def composed(f: Expression, g: PoincareTransformation):
    chart = g.spec.chart
    return lambda x: evaluate_at(f, chart.coords, g(x))
