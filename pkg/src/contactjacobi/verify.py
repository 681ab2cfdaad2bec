"""Verification suites: named residual checks with thresholds.

Every suite returns a list of :class:`Check`. A check that raises a library
error fails with the message as its diagnostic instead of aborting the run.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import mass_shell as ms
from .config import ModelConfig, make_rng, model_from_dict
from .contact import (
    ContactStructure,
    bracket_function,
    commutator,
    jacobi_bracket,
    jacobian_vector_field,
    lie_derivative,
    scalar_gradient,
    scalar_value,
)
from .errors import ContactJacobiError, PreconditionError
from .expression import evaluate_at, parse_expression, var
from .extended import (
    build_theta_H,
    contact_structure,
    darboux_contact,
    darboux_free_particle,
    darboux_map,
    dynamics_field,
    flow_to_level,
    free_particle,
    hamilton_jacobi_residual,
    harmonic_oscillator,
    integrate_flow,
    inverse_darboux_free_particle,
    lagrangian_density,
    restricted_poisson_bracket,
    tilde_contact,
    tilde_section,
    tilde_transform,
    w_section,
)
from .forms import d_dd_residual, pullback_one_form
from .variational import (
    DiscreteSection,
    VariationField,
    action_differential,
    boundary_term,
    canonical_basis,
    el_pairing,
    el_residual,
    omega_bracket,
    omega_spread,
    solve_bvp,
)

SUITES = ("contact", "poisson-subalgebra", "omega", "poincare", "darboux", "schwinger-weiss")

# fixed polynomial triples for the bracket laws, per chart kind
TRIPLES = {
    "nonrelativistic": ("q*p + s", "p^2 - q", "q^2 + p*s"),
    "darboux": ("Q*P + W", "P^2 - Q", "W*Q + P"),
    "relativistic": ("u1*p2 + u0", "p1^2 - u3", "u2*u0 + p3"),
}


@dataclass(frozen=True)
class Check:
    name: str
    max_residual: float | None
    threshold: float
    passed: bool
    diagnostic: str = ""

    def as_dict(self) -> dict:
        d = {"name": self.name, "max_residual": self.max_residual, "threshold": self.threshold, "passed": self.passed}
        if self.diagnostic:
            d["diagnostic"] = self.diagnostic
        return d


def run_check(name: str, threshold: float, compute: Callable[[], float]) -> Check:
    """Evaluate ``compute`` (a max residual) and compare with ``threshold``."""
    try:
        r = float(compute())
    except ContactJacobiError as exc:
        return Check(name, None, threshold, False, f"{type(exc).__name__}: {exc}")
    if not math.isfinite(r):
        return Check(name, None, threshold, False, "non-finite residual")
    return Check(name, r, threshold, r < threshold)


def max_over(points, fn) -> float:
    return max((float(fn(P)) for P in points), default=0.0)


# ---------------------------------------------------------------------------
# reusable residuals


def antisymmetry_residual(f, g, C: ContactStructure, points) -> float:
    return max_over(points, lambda P: abs(jacobi_bracket(f, g, C, P) + jacobi_bracket(g, f, C, P)))


def jacobi_identity_residual(f, g, h, C: ContactStructure, points) -> float:
    fg, gh, hf = bracket_function(f, g, C), bracket_function(g, h, C), bracket_function(h, f, C)
    return max_over(points, lambda P: abs(jacobi_bracket(fg, h, C, P) + jacobi_bracket(gh, f, C, P)
                                          + jacobi_bracket(hf, g, C, P)))


def homomorphism_residual(f, g, C: ContactStructure, points) -> float:
    Xf, Xg = jacobian_vector_field(f, C), jacobian_vector_field(g, C)
    Xfg = jacobian_vector_field(bracket_function(f, g, C), C)
    return max_over(points, lambda P: np.max(np.abs(commutator(Xf, Xg, P) - Xfg.at(P))))


def reeb_residual(C: ContactStructure, points) -> float:
    return max_over(points, lambda P: max(C.reeb_residuals(P)))


def reeb_term_residual(f, g, C: ContactStructure, points) -> float:
    """``|f G(g) - g G(f)|``: vanishes when the bracket reduces to ``L(df, dg)``."""

    def one(P):
        x = np.asarray(P.values if hasattr(P, "values") else P, dtype=float)
        G = C.reeb_at(x)
        return abs(scalar_value(f, C.chart, x) * (G @ scalar_gradient(g, C.chart, x))
                   - scalar_value(g, C.chart, x) * (G @ scalar_gradient(f, C.chart, x)))

    return max_over(points, one)


def leibniz_residual(f, g, h, C: ContactStructure, points) -> float:
    """``[f g, h] - f [g, h] - g [f, h]``."""
    chart = C.chart
    fg = f * g

    def one(P):
        x = P.values
        return abs(jacobi_bracket(fg, h, C, x) - evaluate_at(f, chart.coords, x) * jacobi_bracket(g, h, C, x)
                   - evaluate_at(g, chart.coords, x) * jacobi_bracket(f, h, C, x))

    return max_over(points, one)


# ---------------------------------------------------------------------------
# suites


def _bracket_law_checks(prefix: str, C: ContactStructure, kind: str, points) -> list[Check]:
    f, g, h = (parse_expression(t, C.chart) for t in TRIPLES[kind])
    return [
        run_check(f"{prefix}.antisymmetry", 1e-6, lambda: antisymmetry_residual(f, g, C, points)),
        run_check(f"{prefix}.jacobi-identity", 1e-6, lambda: jacobi_identity_residual(f, g, h, C, points)),
        run_check(f"{prefix}.homomorphism", 1e-6, lambda: homomorphism_residual(f, g, C, points)),
    ]


def _structure_checks(prefix: str, C: ContactStructure, points) -> list[Check]:
    checks = [
        run_check(f"{prefix}.reeb", 1e-8, lambda: reeb_residual(C, points)),
        run_check(f"{prefix}.annihilation", 1e-8, lambda: max_over(points, C.annihilation_residual)),
        run_check(f"{prefix}.contact-rank", 0.5, lambda: max_over(points, lambda P: C.dim - C.contact_rank(P))),
        run_check(f"{prefix}.dd-theta", 1e-10, lambda: max_over(points, lambda P: d_dd_residual(C.omega, P))),
    ]
    if C.reeb is not None:
        checks.append(run_check(f"{prefix}.reeb-closed-form", 1e-8,
                                lambda: max_over(points, lambda P: np.max(np.abs(C.solve_reeb(P) - C.reeb_at(P))))))
    if C.bivector is not None:
        checks.append(run_check(f"{prefix}.bivector-closed-form", 1e-8, lambda: max_over(
            points, lambda P: np.max(np.abs(C.solve_bivector(P) - C.bivector_at(P))))))
    return checks


def _nonrel_dynamics_checks(prefix: str, model: ModelConfig, C: ContactStructure, points) -> list[Check]:
    spec = model.system
    X = dynamics_field(spec)
    L = lagrangian_density(spec)
    chart = spec.chart

    def reeb_parallel(P):
        x = P.values
        return np.max(np.abs(C.solve_reeb(x) - X.at(x) / evaluate_at(L, chart.coords, x)))

    return [
        run_check(f"{prefix}.dynamics-kernel", 1e-10,
                  lambda: max_over(points, lambda P: np.max(np.abs(X.at(P) @ C.omega_at(P))))),
        run_check(f"{prefix}.dynamics-theta", 1e-10, lambda: max_over(
            points, lambda P: abs(X.at(P) @ C.theta_at(P) - evaluate_at(L, chart.coords, P.values)))),
        run_check(f"{prefix}.reeb-parallel-dynamics", 1e-10, lambda: max_over(points, reeb_parallel)),
    ]


def default_free_particle() -> ModelConfig:
    return model_from_dict({"kind": "nonrelativistic", "n": 1, "hamiltonian": "p^2/2", "exclude": "p == 0",
                            "name": "free particle", "invariants": ["q - p*s", "p"]})


def default_oscillator() -> ModelConfig:
    return model_from_dict({"kind": "nonrelativistic", "n": 1, "hamiltonian": "(p^2 + q^2)/2",
                            "name": "harmonic oscillator",
                            "bvp": {"q_initial": 0.0, "q_final": 1.0, "s_span": [0.0, 1.5707963267948966], "N": 64}})


def default_shell(m: float = 1.0) -> ModelConfig:
    return model_from_dict({"kind": "relativistic", "mass": m, "name": f"mass shell m={m:g}"})


def default_darboux() -> ModelConfig:
    return model_from_dict({"kind": "darboux", "n": 1, "name": "darboux"})


def suite_contact(model: ModelConfig | None, rng, samples: int) -> list[Check]:
    models = [model] if model is not None else [default_darboux(), default_free_particle(), default_shell(0.5),
                                                 default_shell(1.0), default_shell(2.0)]
    checks = []
    for mdl in models:
        prefix = f"contact.{mdl.name.replace(' ', '-')}"
        points = mdl.sample(rng, samples) + mdl.probe_points()
        if mdl.kind == "nonrelativistic":
            C = contact_structure(mdl.system)
        elif mdl.kind == "relativistic":
            C = ms.relativistic_contact(mdl.shell)
        else:
            C = darboux_contact(mdl.n)
        checks += _structure_checks(prefix, C, points)
        if mdl.kind == "nonrelativistic":
            checks += _nonrel_dynamics_checks(prefix, mdl, C, points)
        if mdl.kind == "relativistic":
            shell = mdl.shell
            X = ms.landau_field(shell)
            checks.append(run_check(f"{prefix}.landau-kernel", 1e-10,
                                    lambda: max_over(points, lambda P: np.max(np.abs(X.at(P) @ C.omega_at(P))))))
            checks.append(run_check(f"{prefix}.landau-theta", 1e-10, lambda: max_over(
                points, lambda P: abs(X.at(P) @ C.theta_at(P) - shell.mass**2 / ms.p0_value(P.values[4:], shell.mass)))))
        if (mdl.n == 1 or mdl.kind == "relativistic") and (model is not None or mdl.name in ("darboux", "free particle", "mass shell m=1")):
            law_points = points[: max(1, min(len(points), samples // 2))]
            checks += _bracket_law_checks(prefix, C, mdl.kind, law_points)
    return checks


def _free_particle_invariants(model: ModelConfig):
    if model.invariants:
        return list(model.invariants)
    raise PreconditionError("poisson-subalgebra needs 'invariants' in the model file")


def suite_poisson_subalgebra(model: ModelConfig | None, rng, samples: int) -> list[Check]:
    model = default_free_particle() if model is None else model
    checks = []
    if model.kind == "relativistic":
        shell = model.shell
        C = ms.relativistic_contact(shell)
        Q, Pm, _ = ms.newton_wigner_functions(shell)
        invariants = list(Q) + list(Pm)
        X = ms.landau_field(shell)
    elif model.kind == "nonrelativistic":
        C = contact_structure(model.system)
        invariants = _free_particle_invariants(model)
        X = dynamics_field(model.system)
    else:
        raise PreconditionError("poisson-subalgebra applies to nonrelativistic or relativistic models")
    points = model.sample(rng, samples) + model.probe_points()
    for i, f in enumerate(invariants):
        checks.append(run_check(f"subalgebra.invariant[{i}]", 1e-8,
                                lambda f=f: max_over(points, lambda P: abs(lie_derivative(X, f, P)))))
    pairs = [(invariants[i], invariants[j]) for i in range(len(invariants)) for j in range(i + 1, len(invariants))]
    if model.kind == "nonrelativistic" and len(invariants) >= 2:
        a, b = invariants[0], invariants[1]
        pairs.append((b * b, a * b))
    for k, (f, g) in enumerate(pairs):
        checks.append(run_check(f"subalgebra.reeb-terms[{k}]", 1e-8, lambda f=f, g=g: reeb_term_residual(f, g, C, points)))
    if len(invariants) >= 2:
        a, b = invariants[0], invariants[1]
        c = invariants[2] if len(invariants) > 2 else a * a + b
        checks.append(run_check("subalgebra.leibniz", 1e-6, lambda: leibniz_residual(a, b, c, C, points)))
    if model.kind == "nonrelativistic" and model.system.n == 1 and model.system.hamiltonian == free_particle().hamiltonian:
        checks += _free_particle_sections(model, C, points)
    return checks


def _free_particle_sections(model: ModelConfig, C: ContactStructure, points) -> list[Check]:
    """Jacobi bracket of invariants vs the W- and W~-section brackets and the Omega bracket."""
    Qx, Px = parse_expression("q - p*s", model.chart), var("p")
    c0 = model.section_level
    pairs_ext = [(Qx, Px), (Px * Px, Qx * Px)]
    Wsec, Tsec = w_section(1, c0), tilde_section(1, c0)
    pairs_w = [(var("Q"), var("P")), (var("P") ** 2, var("Q") * var("P"))]
    pairs_t = [(var("Qt"), var("Pt")), (var("Pt") ** 2, var("Qt") * var("Pt"))]
    Xh = dynamics_field(model.system)
    W = parse_expression("p^2*s/2", model.chart)
    Wt = parse_expression("p*q/2", model.chart)

    def agreement(section, pairs_sec, level, to_section):
        def one(P):
            worst = 0.0
            y, _ = flow_to_level(Xh, P, level, c0)
            z = to_section(y)
            for (f, g), (fs, gs) in zip(pairs_ext, pairs_sec):
                worst = max(worst, abs(jacobi_bracket(f, g, C, y) - restricted_poisson_bracket(fs, gs, section, z)))
            return worst
        return one

    def to_w(y):
        return darboux_free_particle(model.chart.point(y)).values

    def to_t(y):
        return tilde_transform(darboux_free_particle(model.chart.point(y))).values

    def independence(P):
        yw, _ = flow_to_level(Xh, P, W, c0)
        yt, _ = flow_to_level(Xh, P, Wt, c0)
        f, g = pairs_ext[1]
        return abs(jacobi_bracket(f, g, C, yw) - jacobi_bracket(f, g, C, yt))

    few = points[: min(len(points), 20)]

    def omega_three_way():
        spec = model.system
        sol = solve_bvp(spec, 0.0, 1.0, (0.0, 1.0), 64).section
        basis = canonical_basis(sol, spec)
        worst = 0.0
        for k in (0, 32, 64):
            om = omega_bracket(sol, spec, Qx, Px, k, basis)
            x = np.array([sol.u[k, 0], sol.p[max(k - 1, 0), 0], sol.s[k]])
            y, _ = flow_to_level(Xh, x, W, c0)
            sec = restricted_poisson_bracket(var("Q"), var("P"), Wsec, to_w(y))
            jac = jacobi_bracket(Qx, Px, C, x)
            worst = max(worst, abs(om - jac), abs(om - sec), abs(jac - sec))
        return worst

    return [
        run_check("subalgebra.w-section-agreement", 1e-8, lambda: max_over(few, agreement(Wsec, pairs_w, W, to_w))),
        run_check("subalgebra.w-tilde-section-agreement", 1e-8,
                  lambda: max_over(few, agreement(Tsec, pairs_t, Wt, to_t))),
        run_check("subalgebra.section-independence", 1e-8, lambda: max_over(few, independence)),
        run_check("subalgebra.omega-three-way", 1e-8, omega_three_way),
    ]


def suite_omega(model: ModelConfig | None, rng, samples: int) -> list[Check]:
    model = default_oscillator() if model is None else model
    if model.kind != "nonrelativistic":
        raise PreconditionError("omega applies to nonrelativistic models")
    bvp = {"q_initial": 0.0, "q_final": 1.0, "s_span": [0.0, 1.0], "N": 64, **model.bvp}
    spec = model.system

    def solution():
        return solve_bvp(spec, bvp["q_initial"], bvp["q_final"], bvp["s_span"], int(bvp["N"])).section

    def spread():
        sol = solution()
        return omega_spread(sol, canonical_basis(sol, spec))

    def tangent_residual():
        sol = solution()
        return max(U.residual for U in canonical_basis(sol, spec))

    return [
        run_check("omega.el-residual", 1e-10, lambda: el_residual(solution(), spec).max_abs),
        run_check("omega.node-spread", 1e-8, spread),
        run_check("omega.tangent-residual", 1e-8, tangent_residual),
    ]


def suite_schwinger_weiss(model: ModelConfig | None, rng, samples: int) -> list[Check]:
    specs = [model.system] if model is not None and model.system is not None else [
        harmonic_oscillator(), model_from_dict({"kind": "nonrelativistic", "hamiltonian": "p^2/2 - cos(q) + s*q*p"}).system]
    if model is not None and model.system is None:
        raise PreconditionError("schwinger-weiss applies to nonrelativistic models")
    checks = []
    for i, spec in enumerate(specs):
        def decomposition(spec=spec):
            worst = 0.0
            for _ in range(20):
                N = int(rng.integers(4, 24))
                s0 = rng.uniform(-1, 1)
                s = np.linspace(s0, s0 + rng.uniform(0.5, 2.0), N + 1)
                shape = (N + 1, spec.n)
                chi = DiscreteSection(s, rng.uniform(-1, 1, shape), rng.uniform(-1, 1, shape))
                U = VariationField(chi, rng.uniform(-1, 1, shape), rng.uniform(-1, 1, shape))
                worst = max(worst, abs(action_differential(chi, U, spec) - el_pairing(chi, U, spec) - boundary_term(chi, U)))
            return worst
        checks.append(run_check(f"schwinger-weiss.decomposition[{i}]", 1e-9, decomposition))
    return checks


def suite_darboux(model: ModelConfig | None, rng, samples: int) -> list[Check]:
    fp = default_free_particle() if model is None else model
    if fp.kind != "nonrelativistic" or fp.system.hamiltonian != free_particle(fp.n).hamiltonian:
        raise PreconditionError("darboux applies to the free particle")
    n = fp.n
    points = fp.sample(rng, samples)
    theta_H = build_theta_H(fp.system)
    Dc = darboux_contact(n)
    pulled = pullback_one_form(Dc.theta, fp.chart, darboux_map(n))

    def pullback(P):
        return np.max(np.abs(theta_H.at(P) - pulled.at(P)))

    def roundtrip(P):
        return np.max(np.abs(inverse_darboux_free_particle(darboux_free_particle(P)).values - P.values))

    def hj(P):
        # reuse the sampled coordinates as (q, Q, s) with s kept away from 0
        q, Q, s = P.values[0], P.values[n], P.values[-1]
        return abs(hamilton_jacobi_residual(q, Q, abs(s) + 0.5))

    T = tilde_contact(n)
    tc = T.chart
    # tilde coordinates in terms of Darboux ones, for pulling the tilde form back
    Qs, Ps, Wn = Dc.chart.coords[:n], Dc.chart.coords[n:2 * n], Dc.chart.coords[-1]
    tmap = {tc.coords[a]: var(Qs[a]) for a in range(n)}
    tmap.update({tc.coords[n + a]: var(Ps[a]) for a in range(n)})
    wt = var(Wn)
    for a in range(n):
        wt = wt + var(Ps[a]) * var(Qs[a]) / 2
    tmap[tc.coords[-1]] = wt
    tilde_back = pullback_one_form(T.theta, Dc.chart, tmap)

    def tilde_theta(P):
        d = darboux_free_particle(P).values
        return np.max(np.abs(tilde_back.at(d) - Dc.theta.at(d)))

    return [
        run_check("darboux.pullback", 1e-10, lambda: max_over(points, pullback)),
        run_check("darboux.roundtrip", 1e-12, lambda: max_over(points, roundtrip)),
        run_check("darboux.hamilton-jacobi", 1e-10, lambda: max_over(points, hj)),
        run_check("darboux.tilde-form", 1e-10, lambda: max_over(points, tilde_theta)),
    ]


def suite_poincare(model: ModelConfig | None, rng, samples: int) -> list[Check]:
    model = default_shell(1.0) if model is None else model
    if model.kind != "relativistic":
        raise PreconditionError("poincare applies to relativistic models")
    shell = model.shell
    m = shell.mass
    C = ms.relativistic_contact(shell)
    points = model.sample(rng, samples) + model.probe_points()
    chart = shell.chart
    oracle = ms.structure_constants()
    textbook = ms.closed_form_constants()

    def u_brackets(P):
        x = P.values
        p_up = ms.ETA @ ms.four_momentum(x, m)
        worst = 0.0
        for a in range(4):
            for b in range(a + 1, 4):
                want = (x[a] * p_up[b] - x[b] * p_up[a]) / m**2
                worst = max(worst, abs(jacobi_bracket(var(f"u{a}"), var(f"u{b}"), C, x) - want))
        return worst

    def fields(P):
        worst = 0.0
        for label in ms.all_labels():
            f = ms.poincare_function(shell, label)
            worst = max(worst, np.max(np.abs(jacobian_vector_field(f, C).at(P) - ms.poincare_field(shell, label).at(P))))
        return worst

    def nw_drift():
        X = ms.landau_field(shell)
        worst = 0.0
        for P in points[:5]:
            end = integrate_flow(X, P, (0.0, 5.0)).points[-1]
            a, b = ms.newton_wigner(P, m), ms.newton_wigner(end, m)
            worst = max(worst, np.max(np.abs(a.Q - b.Q)), np.max(np.abs(a.P - b.P)))
        return worst

    def reparam():
        lam = np.linspace(0.5, 2.0, 25)
        worst = 0.0
        for P in points[:5]:
            x = P.values
            for params in (lam, lam**3):
                curve = ms.straight_worldline(x[:4], x[4:], m, params)
                worst = max(worst, ms.reparam_el_residual(params, curve, m).max_normalized)
        return worst

    f_inv = parse_expression("u1*p2 + u0^2", chart)
    h_inv = parse_expression("u3*p0 - p1*u2", chart)

    def invariance():
        g = ms.PoincareTransformation.random(shell, rng)
        F, H = ms.composed(f_inv, g), ms.composed(h_inv, g)
        return max_over(points[:5], lambda P: abs(jacobi_bracket(F, H, C, P) - jacobi_bracket(f_inv, h_inv, C, g(P.values))))

    def kinematical():
        X = ms.landau_field(shell)
        return max_over(points, lambda P: abs(X.at(P)[0] - 1.0))

    checks = [
        run_check("poincare.oracle-vs-textbook", 1e-12, lambda: np.max(np.abs(oracle.table - textbook.table))),
        run_check("poincare.closure", 1e-8,
                  lambda: max(e.residual for e in ms.poincare_closure_table(shell, points, oracle, C))),
        run_check("poincare.u-brackets", 1e-9, lambda: max_over(points, u_brackets)),
        run_check("poincare.jacobian-fields", 1e-7, lambda: max_over(points, fields)),
        run_check("poincare.newton-wigner-drift", 1e-9, nw_drift),
        run_check("poincare.reeb-time", 1e-10,
                  lambda: max_over(points, lambda P: abs(ms.reeb_derivative_of_time(shell, P) - 1.0))),
        run_check("poincare.shell-identity", 1e-12, lambda: max_over(points, lambda P: abs(
            ms.four_momentum(P, m) @ ms.ETA @ ms.four_momentum(P, m) - m**2))),
        run_check("poincare.kinematical-time", 1e-15, kinematical),
        run_check("poincare.reparametrization", 1e-8, reparam),
        run_check("poincare.bracket-invariance", 1e-6, invariance),
    ]
    return checks


SUITE_FUNCS = {
    "contact": suite_contact,
    "poisson-subalgebra": suite_poisson_subalgebra,
    "omega": suite_omega,
    "poincare": suite_poincare,
    "darboux": suite_darboux,
    "schwinger-weiss": suite_schwinger_weiss,
}


def applicable(suite: str, model: ModelConfig | None) -> bool:
    if model is None:
        return True
    if suite in ("omega", "schwinger-weiss"):
        return model.kind == "nonrelativistic"
    if suite == "poincare":
        return model.kind == "relativistic"
    if suite == "darboux":
        return model.kind == "nonrelativistic" and model.system.hamiltonian == free_particle(model.n).hamiltonian
    if suite == "poisson-subalgebra":
        return model.kind == "relativistic" or (model.kind == "nonrelativistic" and bool(model.invariants))
    return True


def run_suite(suite: str, model: ModelConfig | None = None, seed: int = 0, samples: int = 50) -> dict:
    """Run one suite (or ``"all"``) and return the report dictionary."""
    if suite != "all" and suite not in SUITE_FUNCS:
        raise PreconditionError(f"unknown suite {suite!r}; expected one of {SUITES + ('all',)}")
    names = SUITES if suite == "all" else (suite,)
    if suite != "all" and not applicable(suite, model):
        raise PreconditionError(f"suite {suite!r} does not apply to model kind {model.kind!r}")
    checks: list[Check] = []
    for name in names:
        if not applicable(name, model):
            continue
        # one generator per suite so that suites are reproducible independently of each other
        rng = make_rng(seed * 1000 + SUITES.index(name))
        checks += SUITE_FUNCS[name](model, rng, samples)
    checks.sort(key=lambda c: c.name)
    return {
        "suite": suite,
        "seed": seed,
        "samples": samples,
        "model": None if model is None else model.name,
        "passed": all(c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
