"""Discrete action principle on sections of the extended phase space.

A section is sampled on a uniform grid ``s_0 < ... < s_N``. The discrete action

    S_d = sum_{k<N} [ p_k . (u_{k+1} - u_k) - H(u_k, p_k, s_k) ds ]

has critical points exactly at solutions of the first-order scheme

    (u_{k+1} - u_k)/ds =  dH/dp (u_k, p_k, s_k)
    (p_k - p_{k-1})/ds = -dH/du (u_k, p_k, s_k)

with the endpoint positions fixed and momenta free. ``p_N`` does not enter
``S_d``. The momentum conjugate to ``u_k`` is ``p_{k-1}`` (for ``k = 0`` it is
``p_0 + ds dH/du(0)``); pairing position and this momentum gives the exactly
conserved discrete two-form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, PreconditionError, SingularJacobianError
from .expression import Expression, compile_many, differentiate
from .extended import SystemSpec

NEWTON_TOL = 1e-10
MAX_ITER = 50
# The Newton matrix counts as singular when its smallest singular value drops
# below SINGULAR_SCALE * ds^2. Away from conjugate endpoints that value tends to a
# positive limit as ds -> 0; at a conjugate pair it is about ds^2/24.
SINGULAR_SCALE = 1.0
SPACING_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteSection:
    s: np.ndarray
    u: np.ndarray  # (N+1, n)
    p: np.ndarray  # (N+1, n)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        u = np.atleast_2d(np.asarray(self.u, dtype=float).T).T.copy()
        p = np.atleast_2d(np.asarray(self.p, dtype=float).T).T.copy()
        if s.ndim != 1 or len(s) < 3:
            raise PreconditionError("a section needs at least 3 nodes (N >= 2)")
        if u.shape != p.shape or u.shape[0] != len(s):
            raise PreconditionError(f"shape mismatch: s {s.shape}, u {u.shape}, p {p.shape}")
        steps = np.diff(s)
        if np.any(steps <= 0):
            raise PreconditionError("grid must be strictly increasing")
        if np.max(np.abs(steps - steps[0])) > SPACING_TOL * max(1.0, abs(steps[0])):
            raise PreconditionError("grid must be uniform")
        for name, a in (("s", s), ("u", u), ("p", p)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def uniform(cls, s_span, N: int, u, p) -> "DiscreteSection":
        return cls(np.linspace(s_span[0], s_span[1], N + 1), u, p)

    @property
    def N(self) -> int:
        return len(self.s) - 1

    @property
    def n(self) -> int:
        return self.u.shape[1]

    @property
    def ds(self) -> float:
        return (self.s[-1] - self.s[0]) / self.N

    def same_grid(self, other) -> bool:
        return self.s.shape == other.s.shape and np.array_equal(self.s, other.s)


@dataclass(frozen=True)
class VariationField:
    """Vertical variation ``(du_k, dp_k)`` along a section (no ``ds`` component)."""

    base: DiscreteSection
    du: np.ndarray
    dp: np.ndarray

    def __post_init__(self):
        du = np.asarray(self.du, dtype=float).reshape(self.base.u.shape)
        dp = np.asarray(self.dp, dtype=float).reshape(self.base.p.shape)
        object.__setattr__(self, "du", du)
        object.__setattr__(self, "dp", dp)


@dataclass(frozen=True)
class SolutionTangent(VariationField):
    """Variation obeying the linearised scheme; ``dp_tilde`` is the conjugate-momentum variation per node."""

    dp_tilde: np.ndarray = field(default=None)
    residual: float = 0.0


class _Derivatives:
    """Compiled first and second derivatives of ``H`` in (u, p) at grid nodes."""

    def __init__(self, spec: SystemSpec):
        chart = spec.chart
        H = spec.hamiltonian
        self.n = spec.n
        us, ps = spec.positions, spec.momenta
        self.coords = chart.coords
        self._H = compile_many([H], chart.coords)
        grad = [differentiate(H, c) for c in us + ps]
        self._grad = compile_many(grad, chart.coords)
        hess = [differentiate(g, c) for g in grad for c in us + ps]
        self._hess = compile_many(hess, chart.coords)

    def _x(self, u, p, s):
        return np.concatenate([u, p, [s]])

    def value(self, u, p, s) -> float:
        return float(self._H(self._x(u, p, s))[0])

    def grad(self, u, p, s):
        g = self._grad(self._x(u, p, s))
        return g[:self.n], g[self.n:]

    def hess(self, u, p, s):
        m = self._hess(self._x(u, p, s)).reshape(2 * self.n, 2 * self.n)
        n = self.n
        return m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:]


_DERIV_CACHE: dict = {}


def _derivs(spec: SystemSpec) -> _Derivatives:
    key = (spec.hamiltonian, spec.chart)
    d = _DERIV_CACHE.get(key)
    if d is None:
        d = _DERIV_CACHE[key] = _Derivatives(spec)
    return d


def _check_dim(chi: DiscreteSection, spec: SystemSpec):
    if chi.n != spec.n:
        raise PreconditionError(f"section has {chi.n} degrees of freedom, model has {spec.n}")


def discrete_action(chi: DiscreteSection, spec: SystemSpec) -> float:
    _check_dim(chi, spec)
    d = _derivs(spec)
    total = 0.0
    for k in range(chi.N):
        H = d.value(chi.u[k], chi.p[k], chi.s[k])
        if not np.isfinite(H):
            raise DomainError(f"H is not finite at node {k}")
        total += chi.p[k] @ (chi.u[k + 1] - chi.u[k]) - H * chi.ds
    return float(total)


@dataclass(frozen=True)
class ELResidual:
    """Discrete Hamilton-equation residuals.

    ``du[k-1]`` is the position equation at interior node ``k = 1..N-1``;
    ``dp[k]`` is the momentum equation at node ``k = 0..N-1``. Both are
    gradients of ``S_d`` divided by ``ds``.
    """

    du: np.ndarray
    dp: np.ndarray
    du0: np.ndarray  # one-sided bulk term at node 0: -dH/du(0)

    @property
    def max_abs(self) -> float:
        parts = [np.abs(a).ravel() for a in (self.du, self.dp) if a.size]
        return float(max((a.max() for a in parts), default=0.0))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.du.ravel(), self.dp.ravel()])


def el_residual(chi: DiscreteSection, spec: SystemSpec) -> ELResidual:
    _check_dim(chi, spec)
    d = _derivs(spec)
    N, ds = chi.N, chi.ds
    Hu = np.empty((N, chi.n))
    Hp = np.empty((N, chi.n))
    for k in range(N):
        Hu[k], Hp[k] = d.grad(chi.u[k], chi.p[k], chi.s[k])
    du = (chi.p[:N - 1] - chi.p[1:N]) / ds - Hu[1:]
    dp = (chi.u[1:] - chi.u[:N]) / ds - Hp
    return ELResidual(du, dp, -Hu[0])


def el_pairing(chi: DiscreteSection, U: VariationField, spec: SystemSpec) -> float:
    """Bulk part of ``dS_d(U)``: residuals paired with the variation, times ``ds``."""
    if not chi.same_grid(U.base):
        raise PreconditionError("variation lives on a different grid")
    r = el_residual(chi, spec)
    N = chi.N
    total = np.sum(r.du * U.du[1:N]) + np.sum(r.dp * U.dp[:N]) + r.du0 @ U.du[0]
    return float(total * chi.ds)


def boundary_term(chi: DiscreteSection, U: VariationField) -> float:
    """``p . du`` at the last node minus the same at the first (``p_{N-1}`` pairs with ``u_N``)."""
    if not chi.same_grid(U.base):
        raise PreconditionError("variation lives on a different grid")
    return float(chi.p[chi.N - 1] @ U.du[-1] - chi.p[0] @ U.du[0])


def action_differential(chi: DiscreteSection, U: VariationField, spec: SystemSpec, h: float = 1e-4) -> float:
    """Five-point central difference of ``S_d`` along ``U``."""

    def S(t):
        return discrete_action(DiscreteSection(chi.s, chi.u + t * U.du, chi.p + t * U.dp), spec)

    return (-S(2 * h) + 8 * S(h) - 8 * S(-h) + S(-2 * h)) / (12 * h)


# ---------------------------------------------------------------------------
# boundary value problem


@dataclass(frozen=True)
class BVPResult:
    section: DiscreteSection
    iterations: int
    residual_history: tuple[float, ...]
    min_singular_value: float


def _unpack(z, u0, u1, n, N):
    inner = z[:n * (N - 1)].reshape(N - 1, n)
    p = z[n * (N - 1):].reshape(N, n)
    u = np.vstack([u0, inner, u1])
    return u, p


def _newton_system(z, u0, u1, s, d: _Derivatives):
    n, N = d.n, len(s) - 1
    ds = (s[-1] - s[0]) / N
    u, p = _unpack(z, u0, u1, n, N)
    nu = n * (N - 1)
    size = nu + n * N
    F = np.empty(size)
    J = np.zeros((size, size))
    eye = np.eye(n)

    def ucol(k):  # column slice of u_k (interior only)
        return slice(n * (k - 1), n * k) if 1 <= k <= N - 1 else None

    def pcol(k):
        return slice(nu + n * k, nu + n * (k + 1))

    for k in range(N):
        Hu, Hp = d.grad(u[k], p[k], s[k])
        Huu, Hup, Hpu, Hpp = d.hess(u[k], p[k], s[k])
        # momentum equation at node k (row block for p_k)
        row = pcol(k)
        F[row] = (u[k + 1] - u[k]) / ds - Hp
        if ucol(k + 1) is not None:
            J[row, ucol(k + 1)] += eye / ds
        if ucol(k) is not None:
            J[row, ucol(k)] += -eye / ds - Hpu
        J[row, pcol(k)] += -Hpp
        # position equation at interior node k
        if 1 <= k <= N - 1:
            row = ucol(k)
            F[row] = (p[k - 1] - p[k]) / ds - Hu
            J[row, pcol(k - 1)] += eye / ds
            J[row, pcol(k)] += -eye / ds - Hup
            J[row, ucol(k)] += -Huu
    return F, J


def solve_bvp(spec: SystemSpec, q_initial, q_final, s_span, N: int, max_iter: int = MAX_ITER,
              tol: float = NEWTON_TOL, singular_scale: float = SINGULAR_SCALE) -> BVPResult:
    """Critical section of ``S_d`` with fixed endpoint positions, by Newton's method.

    Raises SingularJacobianError when the Newton matrix is numerically
    singular (conjugate endpoints) and ConvergenceError after ``max_iter``.
    """
    if N < 8:
        raise PreconditionError("N must be at least 8")
    s0, s1 = map(float, s_span)
    if not s1 > s0:
        raise PreconditionError("s_span must be increasing")
    n = spec.n
    u0 = np.atleast_1d(np.asarray(q_initial, dtype=float))
    u1 = np.atleast_1d(np.asarray(q_final, dtype=float))
    if u0.shape != (n,) or u1.shape != (n,):
        raise PreconditionError(f"boundary positions must have {n} components")
    s = np.linspace(s0, s1, N + 1)
    ds = (s1 - s0) / N
    d = _derivs(spec)
    # straight line in u, constant difference-quotient momentum
    line = u0 + np.outer((s - s0) / (s1 - s0), u1 - u0)
    slope = (u1 - u0) / (s1 - s0)
    z = np.concatenate([line[1:N].ravel(), np.tile(slope, N)])
    history = []
    smallest = np.inf
    for it in range(max_iter + 1):
        F, J = _newton_system(z, u0, u1, s, d)
        if not np.all(np.isfinite(F)) or not np.all(np.isfinite(J)):
            raise DomainError(f"H or its derivatives are not finite at Newton iterate {it}")
        res = float(np.max(np.abs(F)))
        history.append(res)
        # checked at every iterate, including a converged one: a conjugate pair
        # leaves a whole family of critical sections
        sv = np.linalg.svd(J, compute_uv=False)
        smallest = min(smallest, sv[-1])
        if sv[-1] < singular_scale * ds**2 or sv[-1] <= 1e-14 * sv[0]:
            raise SingularJacobianError(
                f"singular Jacobian at Newton iterate {it}: smallest singular value {sv[-1]:.3g} "
                f"< {singular_scale * ds**2:.3g} (conjugate endpoints, degenerate boundary value problem)")
        if res < tol:
            u, p = _unpack(z, u0, u1, n, N)
            p = np.vstack([p, p[-1:]])
            return BVPResult(DiscreteSection(s, u, p), it, tuple(history), float(smallest))
        if it == max_iter:
            break
        z = z - np.linalg.solve(J, F)
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations; final residual {history[-1]:.3g}",
                           history[-1])


# ---------------------------------------------------------------------------
# solution tangents and the conserved two-form


def conjugate_momentum(chi: DiscreteSection, spec: SystemSpec) -> np.ndarray:
    """Momentum paired with ``u_k``: ``p_{k-1}`` for ``k >= 1`` and ``p_0 + ds dH/du(0)`` at ``k = 0``."""
    d = _derivs(spec)
    Hu0, _ = d.grad(chi.u[0], chi.p[0], chi.s[0])
    return np.vstack([chi.p[:1] + chi.ds * Hu0, chi.p[:chi.N]])


def transport_variation(chi: DiscreteSection, delta0, spec: SystemSpec, base_tol: float = 1e-9) -> SolutionTangent:
    """Propagate ``(du_0, dp_0)`` with the linearised scheme along the solution ``chi``."""
    _check_dim(chi, spec)
    r = el_residual(chi, spec).max_abs
    if r > base_tol:
        raise PreconditionError(f"base section is not a solution (residual {r:.3g})")
    n, N, ds = chi.n, chi.N, chi.ds
    delta0 = np.asarray(delta0, dtype=float).ravel()
    if delta0.size != 2 * n:
        raise PreconditionError(f"initial variation needs {2 * n} components")
    d = _derivs(spec)
    du = np.zeros((N + 1, n))
    dp = np.zeros((N + 1, n))
    du[0], dp[0] = delta0[:n], delta0[n:]
    eye = np.eye(n)
    for k in range(N):
        if k > 0:
            # (dp_k - dp_{k-1})/ds = -(Huu du_k + Hup dp_k)
            Huu, Hup, _, _ = d.hess(chi.u[k], chi.p[k], chi.s[k])
            dp[k] = np.linalg.solve(eye + ds * Hup, dp[k - 1] - ds * Huu @ du[k])
        _, _, Hpu, Hpp = d.hess(chi.u[k], chi.p[k], chi.s[k])
        du[k + 1] = du[k] + ds * (Hpu @ du[k] + Hpp @ dp[k])
    dp[N] = dp[N - 1]
    Huu0, Hup0, _, _ = d.hess(chi.u[0], chi.p[0], chi.s[0])
    dpt = np.vstack([dp[:1] + ds * (Huu0 @ du[0] + Hup0 @ dp[0]), dp[:N]])
    res = linearised_residual(chi, du, dp, spec)
    return SolutionTangent(chi, du, dp, dpt, res)


def linearised_residual(chi: DiscreteSection, du, dp, spec: SystemSpec) -> float:
    d = _derivs(spec)
    ds, N = chi.ds, chi.N
    worst = 0.0
    for k in range(N):
        Huu, Hup, Hpu, Hpp = d.hess(chi.u[k], chi.p[k], chi.s[k])
        worst = max(worst, np.max(np.abs((du[k + 1] - du[k]) / ds - Hpu @ du[k] - Hpp @ dp[k])))
        if k > 0:
            worst = max(worst, np.max(np.abs((dp[k] - dp[k - 1]) / ds + Huu @ du[k] + Hup @ dp[k])))
    return float(worst)


def omega_form(chi: DiscreteSection, U: SolutionTangent, V: SolutionTangent, k: int) -> float:
    """``du_U . dp_V - du_V . dp_U`` at node ``k`` with conjugate momenta."""
    if not (0 <= k <= chi.N):
        raise IndexError(f"node {k} out of range 0..{chi.N}")
    return float(U.du[k] @ V.dp_tilde[k] - V.du[k] @ U.dp_tilde[k])


def omega_matrix(chi: DiscreteSection, basis, k: int) -> np.ndarray:
    m = len(basis)
    return np.array([[omega_form(chi, basis[i], basis[j], k) for j in range(m)] for i in range(m)])


def omega_spread(chi: DiscreteSection, basis) -> float:
    """Largest deviation of any ``Omega(U_i, U_j)`` across nodes."""
    mats = np.array([omega_matrix(chi, basis, k) for k in range(chi.N + 1)])
    return float(np.max(mats.max(axis=0) - mats.min(axis=0)))


def canonical_basis(chi: DiscreteSection, spec: SystemSpec) -> list[SolutionTangent]:
    m = 2 * chi.n
    return [transport_variation(chi, np.eye(m)[i], spec) for i in range(m)]


def omega_bracket(chi: DiscreteSection, spec: SystemSpec, f: Expression, g: Expression, k: int = 0,
                  basis=None) -> float:
    """Bracket of two solution labels induced by ``Omega``.

    ``f`` and ``g`` are functions on the extended chart evaluated at node
    ``k`` with the conjugate momentum; their differentials along the basis
    of solution tangents are paired with the inverse of the ``Omega`` matrix.
    """
    basis = canonical_basis(chi, spec) if basis is None else basis
    chart = spec.chart
    n = chi.n
    pt = conjugate_momentum(chi, spec)[k]
    x = np.concatenate([chi.u[k], pt, [chi.s[k]]])
    gf = compile_many([differentiate(f, c) for c in chart.coords], chart.coords)(x)
    gg = compile_many([differentiate(g, c) for c in chart.coords], chart.coords)(x)
    df = np.array([gf[:n] @ U.du[k] + gf[n:2 * n] @ U.dp_tilde[k] for U in basis])
    dg = np.array([gg[:n] @ U.du[k] + gg[n:2 * n] @ U.dp_tilde[k] for U in basis])
    O = omega_matrix(chi, basis, k)
    return float(df @ np.linalg.inv(O) @ dg)
