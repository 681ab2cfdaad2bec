"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL summary (printed at the end of the
pytest run and to stdout) and then asserts.
"""
import subprocess
import sys
from pathlib import Path

import numpy as np

from contactjacobi import mass_shell as ms
from contactjacobi.config import make_rng
from contactjacobi.contact import jacobi_bracket, jacobian_vector_field
from contactjacobi.expression import const, parse_expression, var
from contactjacobi.extended import (
    SystemSpec,
    build_theta_H,
    contact_structure,
    darboux_chart,
    darboux_contact,
    darboux_free_particle,
    darboux_map,
    dynamics_field,
    flow_to_level,
    free_particle,
    harmonic_oscillator,
    integrate_flow,
    phase_chart,
    restricted_poisson_bracket,
    tilde_section,
    tilde_transform,
    w_section,
)
from contactjacobi.forms import OneForm, pullback_one_form
from contactjacobi.variational import (
    DiscreteSection,
    VariationField,
    action_differential,
    boundary_term,
    canonical_basis,
    el_pairing,
    omega_bracket,
    omega_spread,
    solve_bvp,
)
from contactjacobi.errors import SingularJacobianError
from contactjacobi.verify import (
    TRIPLES,
    antisymmetry_residual,
    homomorphism_residual,
    jacobi_identity_residual,
    leibniz_residual,
    reeb_term_residual,
)

import conftest

ROOT = Path(__file__).resolve().parent.parent


def record(k: int, title: str, parts: dict[str, tuple[float, float]]):
    """``parts`` maps a label to ``(value, tolerance)``; passes when every value is below its tolerance."""
    ok = all(v < tol for v, tol in parts.values())
    detail = "; ".join(f"{name} {v:.2e} < {tol:.0e}" for name, (v, tol) in parts.items())
    line = f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    conftest.ACCEPTANCE_LINES[k] = line
    print(line)
    assert ok, line


def free_points(rng, count):
    pts = []
    while len(pts) < count:
        x = rng.uniform(-2, 2, 3)
        if abs(x[1]) > 0.25:
            pts.append(x)
    return pts


def test_criterion_01_darboux_pullback():
    rng = make_rng(101)
    chart = darboux_chart(1)
    target = OneForm.from_dict(chart, {"W": const(1), "Q": var("P")})
    pulled = pullback_one_form(target, phase_chart(1), darboux_map(1))
    theta = build_theta_H(free_particle())
    worst = max(np.max(np.abs(pulled.at(x) - theta.at(x))) for x in free_points(rng, 100))
    record(1, "Darboux pullback", {"max coefficient gap": (worst, 1e-10)})


def _reeb_worst(C, points):
    worst = 0.0
    for x in points:
        G = C.solve_reeb(x)
        worst = max(worst, abs(C.theta_at(x) @ G - 1.0), np.max(np.abs(G @ C.omega_at(x))))
    return worst


def test_criterion_02_reeb_certification():
    rng = make_rng(102)
    parts = {"darboux": (_reeb_worst(darboux_contact(), rng.uniform(-2, 2, (100, 3))), 1e-8)}
    spec = free_particle()
    C = contact_structure(spec)
    pts = free_points(rng, 100)
    parts["free particle"] = (_reeb_worst(C, pts), 1e-8)
    for m in (0.5, 1.0, 2.0):
        shell = ms.MassShellSpec(m)
        parts[f"shell m={m:g}"] = (_reeb_worst(ms.relativistic_contact(shell), [P.values for P in shell.sample(rng, 100)]),
                                   1e-8)
    X = dynamics_field(spec)
    gap = max(np.max(np.abs(C.solve_reeb(x) - 2.0 / x[1] ** 2 * X.at(x))) for x in pts)
    parts["G = (2/p^2) X_H"] = (gap, 1e-10)
    record(2, "Reeb certification", parts)


def test_criterion_03_bracket_laws():
    rng = make_rng(103)
    charts = {
        "darboux": (darboux_contact(), "darboux", list(rng.uniform(-2, 2, (50, 3)))),
        "free particle": (contact_structure(free_particle()), "nonrelativistic", free_points(rng, 50)),
        "shell m=1": (ms.relativistic_contact(ms.MassShellSpec(1.0)), "relativistic",
                      [P.values for P in ms.MassShellSpec(1.0).sample(rng, 50)]),
    }
    parts = {}
    for name, (C, kind, pts) in charts.items():
        f, g, h = (parse_expression(t, C.chart) for t in TRIPLES[kind])
        parts[f"{name} antisymmetry"] = (antisymmetry_residual(f, g, C, pts), 1e-6)
        parts[f"{name} Jacobi"] = (jacobi_identity_residual(f, g, h, C, pts), 1e-6)
        parts[f"{name} homomorphism"] = (homomorphism_residual(f, g, C, pts[:10]), 1e-6)
    record(3, "Jacobi-bracket laws", parts)


def test_criterion_04_poisson_subalgebra():
    rng = make_rng(104)
    spec = free_particle()
    chart = spec.chart
    C = contact_structure(spec)
    X = dynamics_field(spec)
    Q, P = parse_expression("q - p*s", chart), var("p")
    pairs = [(Q, P), (P * P, Q * P)]
    pts = free_points(rng, 30)
    reeb = max(reeb_term_residual(f, g, C, pts) for f, g in pairs)
    leibniz = leibniz_residual(Q, P, Q * Q + P, C, [chart.point(x) for x in pts])
    Wlevel = parse_expression("p^2*s/2", chart)
    Wtlevel = parse_expression("p*q/2", chart)
    wsec, tsec = w_section(), tilde_section()
    w_pairs = [(var("Q"), var("P")), (var("P") ** 2, var("Q") * var("P"))]
    t_pairs = [(var("Qt"), var("Pt")), (var("Pt") ** 2, var("Qt") * var("Pt"))]
    w_gap = t_gap = 0.0
    for x in pts[:20]:
        y, _ = flow_to_level(X, x, Wlevel)
        z, _ = flow_to_level(X, x, Wtlevel)
        zw = darboux_free_particle(y).values
        zt = tilde_transform(darboux_free_particle(z)).values
        for (f, g), (fw, gw), (ft, gt) in zip(pairs, w_pairs, t_pairs):
            w_gap = max(w_gap, abs(jacobi_bracket(f, g, C, y) - restricted_poisson_bracket(fw, gw, wsec, zw)))
            t_gap = max(t_gap, abs(jacobi_bracket(f, g, C, z) - restricted_poisson_bracket(ft, gt, tsec, zt)))
    # Omega bracket on a discrete solution against the other two
    sol = solve_bvp(spec, 0.0, 1.0, (0.0, 1.0), 64).section
    basis = canonical_basis(sol, spec)
    three = 0.0
    for k in (0, 32, 64):
        om = omega_bracket(sol, spec, Q, P, k, basis)
        x = np.array([sol.u[k, 0], sol.p[max(k - 1, 0), 0], sol.s[k]])
        y, _ = flow_to_level(X, x, Wlevel)
        sec = restricted_poisson_bracket(var("Q"), var("P"), wsec, darboux_free_particle(y).values)
        jac = jacobi_bracket(Q, P, C, x)
        three = max(three, abs(om - jac), abs(om - sec), abs(jac - sec))
    record(4, "Poisson-subalgebra theorem", {
        "Reeb terms": (reeb, 1e-8), "Leibniz": (leibniz, 1e-6),
        "W-section": (w_gap, 1e-8), "W~-section": (t_gap, 1e-8), "Jacobi/Omega/section": (three, 1e-8),
    })


def test_criterion_05_schwinger_weiss_decomposition():
    rng = make_rng(105)
    parts = {}
    for name, spec in (("oscillator", harmonic_oscillator()),
                       ("driven pendulum", SystemSpec.from_text("p^2/2 - cos(q) + s*q*p"))):
        worst = 0.0
        for _ in range(20):
            N = int(rng.integers(4, 24))
            s0 = rng.uniform(-1, 1)
            shape = (N + 1, 1)
            chi = DiscreteSection.uniform((s0, s0 + rng.uniform(0.5, 2.0)), N, rng.uniform(-1, 1, shape),
                                          rng.uniform(-1, 1, shape))
            U = VariationField(chi, rng.uniform(-1, 1, shape), rng.uniform(-1, 1, shape))
            worst = max(worst, abs(action_differential(chi, U, spec) - el_pairing(chi, U, spec) - boundary_term(chi, U)))
        parts[name] = (worst, 1e-9)
    record(5, "dS = EL + boundary", parts)


def test_criterion_06_bvp_solver():
    sol = solve_bvp(free_particle(), 0.0, 1.0, (0.0, 1.0), 64).section
    free_err = max(np.max(np.abs(sol.u[:, 0] - sol.s)), np.max(np.abs(sol.p - 1.0)))
    spec = harmonic_oscillator()
    errs = []
    Ns = (32, 64, 128, 256)
    for N in Ns:
        chi = solve_bvp(spec, 0.0, 1.0, (0.0, 1.0), N).section
        # whole section: positions and momenta against the exact solution
        errs.append(max(np.max(np.abs(chi.u[:, 0] - np.sin(chi.s) / np.sin(1.0))),
                        np.max(np.abs(chi.p[:, 0] - np.cos(chi.s) / np.sin(1.0)))))
    order = np.polyfit(np.log(1.0 / np.array(Ns)), np.log(errs), 1)[0]  # slope of log error vs log ds
    try:
        solve_bvp(spec, 0.0, 0.0, (0.0, np.pi), 64)
        flagged = False
    except SingularJacobianError:
        flagged = True
    record(6, "BVP solver", {
        "free particle error": (free_err, 1e-10),
        "|order - 1|": (abs(order - 1.0), 0.2),
        "conjugate pair not flagged": (0.0 if flagged else 1.0, 0.5),
    })


def test_criterion_07_omega_node_independence():
    spec = harmonic_oscillator()
    sol = solve_bvp(spec, 0.0, 1.0, (0.0, 1.0), 64).section
    record(7, "Omega node independence", {"node spread": (omega_spread(sol, canonical_basis(sol, spec)), 1e-8)})


def test_criterion_08_relativistic_identities():
    rng = make_rng(108)
    shell = ms.MassShellSpec(1.0)
    C = ms.relativistic_contact(shell)
    pts = [P.values for P in shell.sample(rng, 100)]
    u_gap = 0.0
    for x in pts:
        p_up = ms.ETA @ ms.four_momentum(x, 1.0)
        for a in range(4):
            for b in range(a + 1, 4):
                want = (x[a] * p_up[b] - x[b] * p_up[a]) / shell.mass**2
                u_gap = max(u_gap, abs(jacobi_bracket(var(f"u{a}"), var(f"u{b}"), C, x) - want))
    oracle = ms.structure_constants()
    closure = max(e.residual for e in ms.poincare_closure_table(shell, pts[:20], oracle, C))
    textbook = float(np.max(np.abs(oracle.table - ms.closed_form_constants().table)))
    fields = 0.0
    for x in pts[:20]:
        for label in ms.all_labels():
            got = jacobian_vector_field(ms.poincare_function(shell, label), C).at(x)
            fields = max(fields, np.max(np.abs(got - ms.poincare_field(shell, label).at(x))))
    X = ms.landau_field(shell)
    drift = 0.0
    for x in pts[:5]:
        end = integrate_flow(X, x, (0.0, 5.0)).points[-1]
        a, b = ms.newton_wigner(x, 1.0), ms.newton_wigner(end, 1.0)
        drift = max(drift, np.max(np.abs(a.Q - b.Q)), np.max(np.abs(a.P - b.P)))
    time = max(abs(ms.reeb_derivative_of_time(shell, x) - 1.0) for x in pts)
    record(8, "relativistic identities", {
        "[u, u]": (u_gap, 1e-9), "closure": (closure, 1e-8), "oracle vs textbook": (textbook, 1e-8),
        "Jacobian fields": (fields, 1e-7), "Newton-Wigner drift": (drift, 1e-9), "L_G T - 1": (time, 1e-10),
    })


def test_criterion_09_reparametrization():
    rng = make_rng(109)
    lam = np.linspace(0.5, 2.0, 25)
    parts = {}
    for name, params in (("identity", lam), ("cubic", lam**3)):
        worst = 0.0
        for _ in range(5):
            x0, p = rng.uniform(-2, 2, 4), rng.uniform(-2, 2, 3)
            curve = ms.straight_worldline(x0, p, 1.0, params)
            worst = max(worst, ms.reparam_el_residual(params, curve, 1.0).max_normalized)
        parts[name] = (worst, 1e-8)
    record(9, "reparametrization invariance", parts)


def test_criterion_10_determinism(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"report{i}.json"
        proc = subprocess.run([sys.executable, "-m", "contactjacobi", "verify", "--suite", "all", "--seed", "7",
                               "--out", str(out)], capture_output=True, text=True, cwd=ROOT)
        assert proc.returncode in (0, 1), proc.stderr
        outs.append(out.read_bytes())
    same = outs[0] == outs[1]
    record(10, "determinism of verify --suite all --seed 7", {"reports differ": (0.0 if same else 1.0, 0.5)})
