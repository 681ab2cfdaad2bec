"""Command-line front end.

Exit status: 0 ok, 1 verification failure, 2 usage or configuration error,
3 numerical failure (degenerate point, domain error, singular or
non-convergent Newton solve).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import mass_shell as ms
from .config import ConfigError, ModelConfig, load_model, make_rng
from .contact import jacobi_bracket
from .errors import (
    ChartMismatchError,
    ContactJacobiError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    ExpressionSyntaxError,
    PreconditionError,
    SingularJacobianError,
    UnknownVariableError,
)
from .expression import evaluate_at, parse_expression, substitute, var
from .extended import (
    contact_structure,
    darboux_chart,
    darboux_contact,
    darboux_free_particle,
    dynamics_field,
    free_particle,
    integrate_flow,
    inverse_darboux_free_particle,
    restricted_poisson_bracket,
    tilde_chart,
    tilde_section,
    tilde_transform,
    w_section,
)
from .variational import canonical_basis, omega_matrix, omega_spread, solve_bvp
from .verify import SUITES, report_json, run_suite

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
USAGE_ERRORS = (ConfigError, PreconditionError, ExpressionSyntaxError, UnknownVariableError, ChartMismatchError)
NUMERIC_ERRORS = (DegeneracyError, DomainError, SingularJacobianError, ConvergenceError)


class UsageError(ContactJacobiError):
    pass


def fmt(v) -> str:
    return format(float(v), ".17g")


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _need_model(args) -> ModelConfig:
    if args.spec is None:
        raise UsageError("--spec is required for this command")
    return load_model(args.spec)


def _points(args, model: ModelConfig) -> np.ndarray:
    if args.point:
        pts = [_floats(p, "--point") for p in args.point]
        for p in pts:
            if len(p) != model.chart.dim:
                raise UsageError(f"--point needs {model.chart.dim} coordinates {model.chart.coords}")
        return np.array(pts)
    return np.array([P.values for P in model.sample(make_rng(args.seed), args.samples)])


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    model = _need_model(args)
    s0, s1 = args.s_span
    if model.kind == "nonrelativistic":
        spec = model.system
        X = dynamics_field(spec)
        x0 = _floats(args.x0, "--x0") if args.x0 else None
        if x0 is None or len(x0) != spec.chart.dim - 1:
            raise UsageError(f"--x0 needs the {spec.chart.dim - 1} phase-space values {spec.chart.coords[:-1]}")
        start = np.array(x0 + [s0])
        traj = integrate_flow(X, start, (s0, s1), args.dt, args.method, spec.exclude)
        extra = [("H", spec.hamiltonian)] + [(f"I{i}", f) for i, f in enumerate(model.invariants)]
    elif model.kind == "relativistic":
        shell = model.shell
        X = ms.landau_field(shell)
        x0 = _floats(args.x0, "--x0") if args.x0 else None
        if x0 is None or len(x0) != 7:
            raise UsageError("--x0 needs the 7 chart values u0,u1,u2,u3,p1,p2,p3")
        traj = integrate_flow(X, np.array(x0), (s0, s1), args.dt, args.method)
        Q, _, T = ms.newton_wigner_functions(shell)
        extra = [("H", shell.p_lower(0))] + [(f"Q{j + 1}", q) for j, q in enumerate(Q)] + [("T", T)]
    else:
        raise UsageError("simulate needs a nonrelativistic or relativistic model")
    coords = traj.chart.coords
    header = ["param", *coords, *(name for name, _ in extra)]
    rows = [[t, *x, *(evaluate_at(e, coords, x) for _, e in extra)] for t, x in zip(traj.params, traj.points)]
    if args.format == "json":
        emit(json.dumps({"columns": header, "rows": rows, "method": traj.method, "step": traj.step}) + "\n", args.out)
    else:
        emit(write_csv(header, rows), args.out)
    return EXIT_OK


def cmd_bracket(args) -> int:
    model = _need_model(args)
    chart = model.chart
    if model.kind == "nonrelativistic":
        C = contact_structure(model.system)
    elif model.kind == "relativistic":
        C = ms.relativistic_contact(model.shell)
    else:
        C = darboux_contact(model.n)
    f = parse_expression(args.f, chart)
    g = parse_expression(args.g, chart)
    pts = _points(args, model)
    section = None
    if args.section is not None:
        if model.kind != "darboux":
            raise UsageError("--section needs a darboux model")
        W = chart.coords[-1]
        for h in (f, g):
            if W in h.variables():
                raise UsageError(f"section comparison needs f, g independent of {W}")
        if args.section == "W":
            section = w_section(model.n, model.section_level)
            fs, gs = f, g
        else:
            section = tilde_section(model.n, model.section_level)
            rename = {a: var(b) for a, b in zip(chart.coords, section.chart.coords)}
            fs, gs = substitute(f, rename), substitute(g, rename)
    records = []
    for x in pts:
        rec = {"point": [float(v) for v in x], "bracket": jacobi_bracket(f, g, C, x)}
        if section is not None:
            y = np.array(x, dtype=float)
            if args.section == "W":
                y[-1] = section.c0
            else:
                # move along the characteristic direction d/dW onto W~ = c0
                y = tilde_transform(chart.point(y)).values.copy()
                y[-1] = section.c0
            rec["section_bracket"] = restricted_poisson_bracket(fs, gs, section, y)
        records.append(rec)
    if args.format == "csv":
        header = [*chart.coords, "bracket"] + (["section_bracket"] if section is not None else [])
        rows = [[*r["point"], r["bracket"], *([r["section_bracket"]] if section is not None else [])] for r in records]
        emit(write_csv(header, rows), args.out)
    else:
        emit(json.dumps({"f": args.f, "g": args.g, "section": args.section, "records": records}, indent=2) + "\n",
             args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    model = load_model(args.spec) if args.spec else None
    report = run_suite(args.suite, model, seed=args.seed, samples=args.samples)
    emit(report_json(report), args.out)
    if not report["passed"]:
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
        for c in report["checks"]:
            if not c["passed"] and c.get("diagnostic"):
                print(f"  {c['name']}: {c['diagnostic']}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_solve_bvp(args) -> int:
    model = _need_model(args)
    if model.kind != "nonrelativistic":
        raise UsageError("solve-bvp needs a nonrelativistic model")
    spec = model.system
    bvp = dict(model.bvp)
    for key, val in (("q_initial", args.q0), ("q_final", args.q1), ("s_span", args.s_span), ("N", args.N)):
        if val is not None:
            bvp[key] = val
    missing = [k for k in ("q_initial", "q_final", "s_span", "N") if k not in bvp]
    if missing:
        raise UsageError(f"missing boundary data: {', '.join(missing)}")
    q0 = _floats(str(bvp["q_initial"]).strip("[]"), "q_initial")
    q1 = _floats(str(bvp["q_final"]).strip("[]"), "q_final")
    N = int(bvp["N"])
    if N < 8:
        raise PreconditionError("N must be at least 8")
    try:
        result = solve_bvp(spec, q0, q1, tuple(bvp["s_span"]), N, tol=args.tol)
    except ConvergenceError as exc:
        print(json.dumps({"error": "convergence", "final_residual": exc.residual}), file=sys.stderr)
        raise
    sol = result.section
    basis = canonical_basis(sol, spec)
    omega = {
        "basis": [f"d{c}" for c in spec.chart.coords[:-1]],
        "nodes": [{"s": float(sol.s[k]), "omega": omega_matrix(sol, basis, k).tolist()} for k in range(sol.N + 1)],
        "max_node_spread": omega_spread(sol, basis),
        "newton_iterations": result.iterations,
        "residual_history": list(result.residual_history),
    }
    header = ["s", *spec.positions, *spec.momenta]
    rows = [[sol.s[k], *sol.u[k], *sol.p[k]] for k in range(sol.N + 1)]
    if args.format == "json":
        emit(json.dumps({"columns": header, "rows": [[float(v) for v in r] for r in rows], "omega": omega},
                        indent=2) + "\n", args.out)
        return EXIT_OK
    emit(write_csv(header, rows), args.out)
    omega_out = args.omega_out
    if omega_out is None and args.out is not None:
        omega_out = str(Path(args.out).with_suffix("")) + "_omega.json"
    if omega_out is not None:
        Path(omega_out).write_text(json.dumps(omega, indent=2) + "\n")
    return EXIT_OK


def cmd_darboux(args) -> int:
    model = _need_model(args)
    if model.kind != "nonrelativistic" or model.system.hamiltonian != free_particle(model.n).hamiltonian:
        raise UsageError("darboux needs the free-particle model (hamiltonian p^2/2)")
    n = model.n
    dchart, tchart = darboux_chart(n), tilde_chart(n)
    if args.inverse:
        if not args.point:
            raise UsageError("--inverse needs --point values in Darboux coordinates")
        rows = []
        for p in args.point:
            y = _floats(p, "--point")
            if len(y) != dchart.dim:
                raise UsageError(f"--point needs {dchart.dim} Darboux coordinates {dchart.coords}")
            x = inverse_darboux_free_particle(dchart.point(y)).values
            rows.append([*y, *x])
        header = [*dchart.coords, *model.chart.coords]
    else:
        rows = []
        for x in _points(args, model):
            d = darboux_free_particle(model.chart.point(x))
            t = tilde_transform(d)
            rows.append([*x, *d.values, *t.values])
        header = [*model.chart.coords, *dchart.coords, *tchart.coords]
    if args.format == "json":
        emit(json.dumps({"columns": header, "rows": [[float(v) for v in r] for r in rows]}, indent=2) + "\n", args.out)
    else:
        emit(write_csv(header, rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive (got {text})")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1 (got {text})")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="model file (JSON)")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled points (default 0)")
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    common.add_argument("--tol", type=_positive, default=1e-10, help="Newton residual tolerance (solve-bvp)")
    common.add_argument("--samples", type=_positive_int, default=50, help="number of seeded sample points")

    parser = argparse.ArgumentParser(prog="contactjacobi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="integrate the dynamics from a point")
    p.add_argument("--x0", help="initial values (phase-space coordinates; full chart point for relativistic)")
    p.add_argument("--s-span", nargs=2, type=float, default=(0.0, 1.0), metavar=("S0", "S1"))
    p.add_argument("--dt", type=_positive, default=1e-3)
    p.add_argument("--method", choices=("rk4", "euler"), default="rk4")
    p.set_defaults(func=cmd_simulate, default_format="csv")

    p = sub.add_parser("bracket", parents=[common], help="Jacobi bracket of two expressions")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--point", action="append", help="chart point, comma-separated (repeatable)")
    p.add_argument("--section", choices=("W", "Wt"), help="compare with the section bracket (darboux model)")
    p.set_defaults(func=cmd_bracket, default_format="json")

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.set_defaults(func=cmd_verify, default_format="json")

    p = sub.add_parser("solve-bvp", parents=[common], help="critical section of the discrete action")
    p.add_argument("--q0", help="initial position(s)")
    p.add_argument("--q1", help="final position(s)")
    p.add_argument("--s-span", nargs=2, type=float, metavar=("S0", "S1"))
    p.add_argument("--N", type=int)
    p.add_argument("--omega-out", help="file for the Omega table (csv format)")
    p.set_defaults(func=cmd_solve_bvp, default_format="csv")

    p = sub.add_parser("darboux", parents=[common], help="free-particle Darboux and tilde coordinates")
    p.add_argument("--point", action="append", help="(q, p, s) point, comma-separated (repeatable)")
    p.add_argument("--inverse", action="store_true", help="map (Q, P, W) points back to (q, p, s)")
    p.set_defaults(func=cmd_darboux, default_format="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
