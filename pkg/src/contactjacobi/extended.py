"""Non-relativistic models on the extended phase space ``T*Q x R``.

Chart coordinates are ``(q, p, s)`` for one degree of freedom and
``(u1..un, p1..pn, s)`` otherwise. The contact form is
``theta_H = p_a du^a - H ds``; its characteristic direction is the dynamics
field ``X_H``.

For the free particle the Darboux chart ``(Q, P, W)`` with
``W = |p|^2 s / 2``, ``Q = q - p s``, ``P = p`` turns ``theta_H`` into
``dW + P dQ``, and ``(Q~, P~, W~) = (Q, P, W + P.Q/2)`` gives a second,
inequivalent section ``W~ = c0`` of the characteristic foliation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contact import ContactStructure, build_contact_structure, scalar_gradient
from .errors import DomainError, PreconditionError
from .expression import (
    ZERO,
    Chart,
    ChartPoint,
    Expression,
    coords_of,
    const,
    differentiate,
    evaluate_at,
    parse_expression,
    var,
)
from .forms import Bivector, OneForm, VectorField

SECTION_TOL = 1e-10


def phase_chart(n: int) -> Chart:
    if n < 1:
        raise PreconditionError("configuration dimension must be >= 1")
    if n == 1:
        return Chart("extended", ("q", "p", "s"))
    return Chart("extended", tuple(f"u{a}" for a in range(1, n + 1)) + tuple(f"p{a}" for a in range(1, n + 1)) + ("s",))


def darboux_chart(n: int) -> Chart:
    if n == 1:
        return Chart("darboux", ("Q", "P", "W"))
    return Chart("darboux", tuple(f"Q{a}" for a in range(1, n + 1)) + tuple(f"P{a}" for a in range(1, n + 1)) + ("W",))


def tilde_chart(n: int) -> Chart:
    if n == 1:
        return Chart("tilde", ("Qt", "Pt", "Wt"))
    return Chart("tilde", tuple(f"Qt{a}" for a in range(1, n + 1)) + tuple(f"Pt{a}" for a in range(1, n + 1)) + ("Wt",))


def _split(chart: Chart):
    """(positions, momenta, last) coordinate names of a 2n+1 chart."""
    n = (chart.dim - 1) // 2
    return chart.coords[:n], chart.coords[n:2 * n], chart.coords[-1]


@dataclass(frozen=True)
class SystemSpec:
    """Non-relativistic model: Hamiltonian on the extended phase space."""

    n: int
    hamiltonian: Expression
    chart: Chart
    exclude: Expression | None = None
    name: str = "system"
    sample_box: dict = field(default_factory=dict, compare=False, hash=False)

    @classmethod
    def from_text(cls, hamiltonian: str, n: int = 1, exclude: str | None = None, name: str = "system",
                  sample_box: dict | None = None) -> "SystemSpec":
        chart = phase_chart(n)
        H = parse_expression(hamiltonian, chart)
        ex = None if exclude is None else parse_expression(exclude, chart)
        return cls(n, H, chart, ex, name, dict(sample_box or {}))

    @property
    def positions(self):
        return _split(self.chart)[0]

    @property
    def momenta(self):
        return _split(self.chart)[1]

    def is_autonomous(self) -> bool:
        return "s" not in self.hamiltonian.variables()

    def excluded(self, x, margin: float = 0.0) -> bool:
        if self.exclude is None:
            return False
        return abs(evaluate_at(self.exclude, self.chart.coords, x)) <= margin


def free_particle(n: int = 1) -> SystemSpec:
    chart = phase_chart(n)
    H = ZERO
    for p in _split(chart)[1]:
        H = H + var(p) ** 2
    H = H / 2
    ex = var(_split(chart)[1][0]) if n == 1 else None
    return SystemSpec(n, H, chart, ex, "free particle")


def harmonic_oscillator() -> SystemSpec:
    return SystemSpec.from_text("(p^2 + q^2)/2", name="harmonic oscillator")


def build_theta_H(spec: SystemSpec) -> OneForm:
    """``p_a du^a - H ds``."""
    us, ps, s = _split(spec.chart)
    coeffs = {u: var(p) for u, p in zip(us, ps)}
    coeffs[s] = -spec.hamiltonian
    return OneForm.from_dict(spec.chart, coeffs)


def contact_structure(spec: SystemSpec, probe=None) -> ContactStructure:
    return build_contact_structure(build_theta_H(spec), probe=probe, name=spec.name)


def dynamics_field(spec: SystemSpec) -> VectorField:
    """``X_H = d/ds + dH/dp_a d/du^a - dH/du^a d/dp_a``."""
    us, ps, s = _split(spec.chart)
    H = spec.hamiltonian
    comps = {s: const(1)}
    for u, p in zip(us, ps):
        comps[u] = differentiate(H, p)
        comps[p] = -differentiate(H, u)
    return VectorField.from_dict(spec.chart, comps, name="X_H")


def lagrangian_density(spec: SystemSpec) -> Expression:
    """``p_a dH/dp_a - H``, the value of ``theta_H`` on ``X_H``."""
    total = ZERO
    for p in spec.momenta:
        total = total + var(p) * differentiate(spec.hamiltonian, p)
    return total - spec.hamiltonian


# ---------------------------------------------------------------------------
# flows


@dataclass(frozen=True)
class Trajectory:
    chart: Chart
    params: np.ndarray
    points: np.ndarray
    method: str
    step: float

    def __post_init__(self):
        if np.any(np.diff(self.params) <= 0):
            raise ValueError("trajectory parameters must be strictly increasing")

    def __len__(self):
        return len(self.params)

    @property
    def final(self) -> ChartPoint:
        return ChartPoint(self.chart, self.points[-1])

    def column(self, name: str) -> np.ndarray:
        return self.points[:, self.chart.index(name)]

    def section_defect(self, coord: str = "s") -> float:
        """Max deviation of ``coord - param`` from its initial value (0 for X_H flows)."""
        c = self.column(coord) - self.params
        return float(np.max(np.abs(c - c[0])))


def _rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _euler_step(f, x, h):
    return x + h * f(x)


STEPPERS = {"rk4": _rk4_step, "euler": _euler_step}


def integrate_flow(X: VectorField, P0, s_span, dt: float = 1e-3, method: str = "rk4",
                   exclude: Expression | None = None) -> Trajectory:
    """Integrate ``X`` from ``P0`` over the parameter interval ``s_span``.

    The step is shrunk uniformly so that the span is covered exactly. With
    ``exclude`` given, crossing or touching its zero set is a DomainError.
    """
    s0, s1 = map(float, s_span)
    if not dt > 0:
        raise PreconditionError("dt must be positive")
    if not s1 > s0:
        raise PreconditionError("s_span must be increasing")
    if method not in STEPPERS:
        raise PreconditionError(f"unknown method {method!r}; expected one of {sorted(STEPPERS)}")
    step = STEPPERS[method]
    nsteps = max(1, int(np.ceil((s1 - s0) / dt - 1e-9)))
    h = (s1 - s0) / nsteps
    x = np.array(coords_of(P0, X.chart), dtype=float)
    pts = np.empty((nsteps + 1, x.size))
    pts[0] = x
    f = X.at
    gate = None if exclude is None else (lambda y: evaluate_at(exclude, X.chart.coords, y))
    prev = None if gate is None else gate(x)
    if prev is not None and prev == 0.0:
        raise DomainError(f"initial point lies in the excluded region {exclude}")
    for k in range(nsteps):
        x = step(f, x, h)
        if not np.all(np.isfinite(x)):
            raise DomainError(f"flow left the domain at step {k + 1}")
        if gate is not None:
            cur = gate(x)
            if cur == 0.0 or np.sign(cur) != np.sign(prev):
                raise DomainError(f"flow reached the excluded region {exclude} near parameter {s0 + (k + 1) * h:.6g}")
            prev = cur
        pts[k + 1] = x
    params = s0 + h * np.arange(nsteps + 1)
    params[-1] = s1
    return Trajectory(X.chart, params, pts, method, h)


def flow_point(X: VectorField, x, t: float, dt: float = 1e-3) -> np.ndarray:
    """Endpoint of the flow of ``X`` after parameter time ``t`` (negative allowed)."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return x.copy()
    if t > 0:
        return integrate_flow(X, x, (0.0, t), dt).points[-1]
    back = VectorField(X.chart, func=lambda y: -X.at(y))
    return integrate_flow(back, x, (0.0, -t), dt).points[-1]


def flow_to_level(X: VectorField, P0, level: Expression, c0: float = 0.0, t_max: float = 20.0,
                  dt: float = 1e-3, tol: float = SECTION_TOL, chunk: float = 0.25) -> tuple[np.ndarray, float]:
    """Point where the integral curve of ``X`` through ``P0`` meets ``level = c0``.

    Marches forward and backward in chunks of flow time (nearest crossing
    first), then bisects on the flow time until ``|level - c0| < tol``.
    Returns ``(point, time)``.
    """
    chart = X.chart
    x0 = np.asarray(coords_of(P0, chart), dtype=float)
    g = lambda y: evaluate_at(level, chart.coords, y) - c0  # noqa: E731
    if abs(g(x0)) < tol:
        return x0, 0.0
    back = VectorField(chart, func=lambda y: -X.at(y))
    fronts = {1.0: (X, x0, 0.0), -1.0: (back, x0, 0.0)}
    while any(t < t_max for _, _, t in fronts.values()):
        for direction in (1.0, -1.0):
            field_, start, t0 = fronts[direction]
            if t0 >= t_max:
                continue
            span = min(chunk, t_max - t0)
            traj = integrate_flow(field_, start, (0.0, span), dt)
            vals = np.array([g(y) for y in traj.points])
            crossing = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
            if crossing.size:
                k = crossing[0]
                if vals[k + 1] == 0.0:
                    return traj.points[k + 1], direction * (t0 + traj.params[k + 1])
                base, glo = traj.points[k], vals[k]
                lo, hi = 0.0, traj.params[k + 1] - traj.params[k]
                while True:
                    mid = 0.5 * (lo + hi)
                    y = flow_point(field_, base, mid, dt)
                    gm = g(y)
                    if abs(gm) < tol or hi - lo < 1e-15:
                        return y, direction * (t0 + traj.params[k] + mid)
                    if np.sign(gm) == np.sign(glo):
                        lo, glo = mid, gm
                    else:
                        hi = mid
            fronts[direction] = (field_, traj.points[-1], t0 + span)
    raise DomainError(f"integral curve does not reach {level} = {c0} within |t| <= {t_max}")


# ---------------------------------------------------------------------------
# free-particle Darboux chart and the alternative section


def darboux_map(n: int = 1) -> dict[str, Expression]:
    """Darboux coordinates of the free particle as expressions on the extended chart."""
    src, dst = phase_chart(n), darboux_chart(n)
    us, ps, s = _split(src)
    Qs, Ps, W = _split(dst)
    mapping = {}
    kinetic = ZERO
    for u, p, Qn, Pn in zip(us, ps, Qs, Ps):
        mapping[Qn] = var(u) - var(p) * var(s)
        mapping[Pn] = var(p)
        kinetic = kinetic + var(p) ** 2
    mapping[W] = kinetic * var(s) / 2
    return mapping


def darboux_free_particle(P) -> ChartPoint:
    """``(q, p, s) -> (Q, P, W) = (q - p s, p, |p|^2 s / 2)``."""
    x = np.asarray(coords_of(P), dtype=float)
    n = (x.size - 1) // 2
    u, p, s = x[:n], x[n:2 * n], x[-1]
    return darboux_chart(n).point(np.concatenate([u - p * s, p, [0.5 * (p @ p) * s]]))


def inverse_darboux_free_particle(P) -> ChartPoint:
    """``(Q, P, W) -> (q, p, s)``; undefined where ``P = 0``."""
    x = np.asarray(coords_of(P), dtype=float)
    n = (x.size - 1) // 2
    Q, Pm, W = x[:n], x[n:2 * n], x[-1]
    pp = Pm @ Pm
    if pp == 0.0:
        raise DomainError("inverse Darboux map undefined at P = 0 (s is not recoverable)")
    s = 2.0 * W / pp
    return phase_chart(n).point(np.concatenate([Q + Pm * s, Pm, [s]]))


def hamilton_jacobi_residual(q: float, Q: float, s: float) -> float:
    """``dS/ds + H(q, dS/dq)`` for ``S = (q - Q)^2 / (2 s)`` and ``H = p^2/2``."""
    chart = Chart("hj", ("q", "Q", "s"))
    S = parse_expression("(q - Q)^2/(2*s)", chart)
    x = [q, Q, s]
    dSds = evaluate_at(differentiate(S, "s"), chart.coords, x)
    dSdq = evaluate_at(differentiate(S, "q"), chart.coords, x)
    return dSds + 0.5 * dSdq**2


def tilde_transform(P) -> ChartPoint:
    """``(Q, P, W) -> (Q, P, W + P.Q/2)``."""
    x = np.asarray(coords_of(P), dtype=float)
    n = (x.size - 1) // 2
    Q, Pm, W = x[:n], x[n:2 * n], x[-1]
    return tilde_chart(n).point(np.concatenate([Q, Pm, [W + 0.5 * (Pm @ Q)]]))


def inverse_tilde_transform(P) -> ChartPoint:
    x = np.asarray(coords_of(P), dtype=float)
    n = (x.size - 1) // 2
    Q, Pm, Wt = x[:n], x[n:2 * n], x[-1]
    return darboux_chart(n).point(np.concatenate([Q, Pm, [Wt - 0.5 * (Pm @ Q)]]))


def darboux_contact(n: int = 1) -> ContactStructure:
    """``theta = dW + P_a dQ^a`` with closed-form Reeb field and bivector attached."""
    chart = darboux_chart(n)
    Qs, Ps, W = _split(chart)
    theta = OneForm.from_dict(chart, {W: const(1), **{Qn: var(Pn) for Qn, Pn in zip(Qs, Ps)}})
    reeb = VectorField.from_dict(chart, {W: const(1)}, name="reeb")
    lam = Bivector.wedge_sum(chart, [({Pn: const(1)}, {Qn: const(1), W: -var(Pn)}) for Qn, Pn in zip(Qs, Ps)])
    return build_contact_structure(theta, reeb=reeb, bivector=lam, name="darboux")


def tilde_contact(n: int = 1) -> ContactStructure:
    """``theta = dW~ + (P~/2) dQ~ - (Q~/2) dP~``: the Darboux form rewritten in tilde coordinates."""
    chart = tilde_chart(n)
    Qs, Ps, W = _split(chart)
    coeffs = {W: const(1)}
    for Qn, Pn in zip(Qs, Ps):
        coeffs[Qn] = var(Pn) / 2
        coeffs[Pn] = -var(Qn) / 2
    return build_contact_structure(OneForm.from_dict(chart, coeffs), name="tilde")


# ---------------------------------------------------------------------------
# level-set sections and their Poisson bracket


@dataclass(frozen=True)
class Section:
    """The level set ``level_coord = c0`` inside the chart of ``contact``."""

    contact: ContactStructure
    level_coord: str
    c0: float = 0.0

    @property
    def chart(self) -> Chart:
        return self.contact.chart

    @property
    def coords(self) -> tuple[str, ...]:
        return tuple(c for c in self.chart.coords if c != self.level_coord)

    def _keep(self):
        drop = self.chart.index(self.level_coord)
        return [i for i in range(self.chart.dim) if i != drop]

    def check(self, P) -> np.ndarray:
        x = np.asarray(coords_of(P, self.chart), dtype=float)
        off = abs(x[self.chart.index(self.level_coord)] - self.c0)
        if off > SECTION_TOL:
            raise DomainError(f"point is off the section {self.level_coord} = {self.c0} by {off:.3g}")
        return x

    def poisson_bivector(self, P) -> np.ndarray:
        """Bivector of the section bracket, ``L_W = -(w|_W)^{-1}``."""
        x = self.check(P)
        keep = self._keep()
        sigma = self.contact.omega_at(x)[np.ix_(keep, keep)]
        return -np.linalg.inv(sigma)

    def lift_field(self, f: Expression, P) -> np.ndarray:
        """``L_W(df, .)`` as a vector on the full chart (zero along the level coordinate)."""
        x = self.check(P)
        keep = self._keep()
        df = scalar_gradient(f, self.chart, x)[keep]
        out = np.zeros(self.chart.dim)
        out[keep] = df @ self.poisson_bivector(x)
        return out


def w_section(n: int = 1, c0: float = 0.0) -> Section:
    return Section(darboux_contact(n), darboux_chart(n).coords[-1], c0)


def tilde_section(n: int = 1, c0: float = 0.0) -> Section:
    return Section(tilde_contact(n), tilde_chart(n).coords[-1], c0)


def restricted_poisson_bracket(f: Expression, g: Expression, section: Section, P) -> float:
    """``{f, g}_W = L_W(df, dg)`` on the section through ``P``."""
    x = section.check(P)
    keep = section._keep()
    df = scalar_gradient(f, section.chart, x)[keep]
    dg = scalar_gradient(g, section.chart, x)[keep]
    return float(df @ section.poisson_bivector(x) @ dg)
