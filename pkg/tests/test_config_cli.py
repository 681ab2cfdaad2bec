import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from contactjacobi.cli import main
from contactjacobi.config import ConfigError, load_model, make_rng, model_from_dict

MODELS = Path(__file__).resolve().parent.parent / "models"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


class TestConfig:
    def test_free_particle_file(self):
        cfg = load_model(MODELS / "free_particle.json")
        assert cfg.kind == "nonrelativistic" and cfg.chart.coords == ("q", "p", "s")
        assert len(cfg.invariants) == 2
        assert cfg.box("s") == (-2.0, 2.0)

    def test_sampling_respects_exclusion(self):
        cfg = load_model(MODELS / "free_particle.json")
        pts = cfg.sample(make_rng(3), 200)
        assert min(abs(P["p"]) for P in pts) > 0.25

    def test_sampling_is_seeded(self):
        cfg = load_model(MODELS / "relativistic.json")
        a = [P.values for P in cfg.sample(make_rng(5), 5)]
        b = [P.values for P in cfg.sample(make_rng(5), 5)]
        assert np.array_equal(a, b)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_model(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text("{kind: 1")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_model(f)

    @pytest.mark.parametrize("d,msg", [
        ({"kind": "quantum"}, "kind"),
        ({"kind": "nonrelativistic"}, "hamiltonian"),
        ({"kind": "relativistic", "mass": "one"}, "wrong type"),
        ({"kind": "relativistic", "mass": -1.0}, "positive"),
        ({"kind": "nonrelativistic", "hamiltonian": "p^2", "sample_box": {"q": [1, 0]}}, "lo < hi"),
        ({"kind": "nonrelativistic", "hamiltonian": "p^2", "probes": [[1, 2]]}, "3 coordinates"),
        ({"kind": "nonrelativistic", "hamiltonian": "p^2", "exclude": "p =="}, "right-hand side"),
    ])
    def test_invalid_models(self, d, msg):
        with pytest.raises(ConfigError, match=msg):
            model_from_dict(d)

    def test_exclusion_with_right_hand_side(self):
        cfg = model_from_dict({"kind": "nonrelativistic", "hamiltonian": "p^2", "exclude": "p == 1"})
        assert not cfg.admissible([0.0, 1.1, 0.0])
        assert cfg.admissible([0.0, 1.5, 0.0])


class TestSimulate:
    def test_free_particle_endpoint(self, capsys):
        code, out, _ = run(capsys, "simulate", "--spec", MODELS / "free_particle.json", "--x0", "0,1", "--dt", "0.01")
        header, rows = read_csv(out)
        assert code == 0
        assert header[:4] == ["param", "q", "p", "s"]
        assert np.allclose(rows[-1][:4], [1.0, 1.0, 1.0, 1.0], atol=1e-12)
        assert np.allclose(rows[:, header.index("I1")], 1.0)

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "simulate", "--spec", MODELS / "oscillator.json", "--x0", "1,0", "--format", "json",
                           "--s-span", "0", str(2 * np.pi))
        data = json.loads(out)
        assert code == 0 and data["method"] == "rk4"
        assert abs(data["rows"][-1][1] - 1.0) < 1e-10

    def test_relativistic(self, capsys):
        code, out, _ = run(capsys, "simulate", "--spec", MODELS / "relativistic.json", "--x0", "0,0,0,0,0.75,0,0",
                           "--s-span", "0", "2")
        header, rows = read_csv(out)
        assert code == 0
        assert rows[-1][header.index("u1")] == pytest.approx(-1.2)
        assert np.ptp(rows[:, header.index("Q1")]) < 1e-12

    def test_missing_spec(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", "--spec", tmp_path / "missing.json", "--x0", "0,1")
        assert code == 2 and "cannot read" in err

    def test_wrong_x0(self, capsys):
        code, _, _ = run(capsys, "simulate", "--spec", MODELS / "free_particle.json", "--x0", "0,1,2")
        assert code == 2

    def test_flow_into_excluded_region(self, capsys):
        code, _, err = run(capsys, "simulate", "--spec", MODELS / "free_particle.json", "--x0", "0,0")
        assert code == 3 and "excluded" in err

    def test_nonpositive_dt_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["simulate", "--spec", str(MODELS / "free_particle.json"), "--x0", "0,1", "--dt", "0"])
        assert e.value.code == 2


class TestBracket:
    def test_relativistic_positions(self, capsys):
        code, out, _ = run(capsys, "bracket", "--spec", MODELS / "relativistic.json", "--f", "u1", "--g", "u0",
                           "--point", "0,1,0,0,0,0,0")
        assert code == 0
        assert json.loads(out)["records"][0]["bracket"] == pytest.approx(1.0)

    @pytest.mark.parametrize("section", ["W", "Wt"])
    def test_darboux_sections(self, capsys, section):
        code, out, _ = run(capsys, "bracket", "--spec", MODELS / "darboux.json", "--f", "Q", "--g", "P",
                           "--point", "0.5,1.5,0.3", "--section", section, "--format", "csv")
        header, rows = read_csv(out)
        assert code == 0 and header[-2:] == ["bracket", "section_bracket"]
        assert rows[0][-2:] == pytest.approx([-1.0, -1.0])

    def test_syntax_error(self, capsys):
        code, _, err = run(capsys, "bracket", "--spec", MODELS / "darboux.json", "--f", "P+*Q", "--g", "P",
                           "--point", "0,1,0")
        assert code == 2 and "column 3" in err

    def test_degenerate_point(self, capsys):
        code, _, err = run(capsys, "bracket", "--spec", MODELS / "free_particle.json", "--f", "q", "--g", "p",
                           "--point", "0.5,0,0")
        assert code == 3 and "contact" in err.lower()

    def test_self_bracket_is_zero(self, capsys):
        code, out, _ = run(capsys, "bracket", "--spec", MODELS / "oscillator.json", "--f", "q*p + s", "--g", "q*p + s",
                           "--samples", "5")
        assert code == 0 and all(abs(r["bracket"]) < 1e-12 for r in json.loads(out)["records"])

    def test_sampled_points(self, capsys):
        code, out, _ = run(capsys, "bracket", "--spec", MODELS / "darboux.json", "--f", "P", "--g", "Q",
                           "--samples", "4", "--seed", "1")
        recs = json.loads(out)["records"]
        assert code == 0 and len(recs) == 4
        assert all(r["bracket"] == pytest.approx(1.0) for r in recs)


class TestSolveBVP:
    def test_free_particle(self, capsys, tmp_path):
        out = tmp_path / "sol.csv"
        code, _, _ = run(capsys, "solve-bvp", "--spec", MODELS / "free_particle.json", "--out", out)
        assert code == 0
        header, rows = read_csv(out.read_text())
        assert header == ["s", "q", "p"]
        assert np.max(np.abs(rows[:, 1] - rows[:, 0])) < 1e-10
        omega = json.loads((tmp_path / "sol_omega.json").read_text())
        assert omega["nodes"][0]["omega"] == [[0.0, 1.0], [-1.0, 0.0]]
        assert omega["max_node_spread"] < 1e-12

    def test_conjugate(self, capsys):
        code, _, err = run(capsys, "solve-bvp", "--spec", MODELS / "oscillator_conjugate.json")
        assert code == 3 and "singular Jacobian" in err

    def test_too_few_nodes(self, capsys):
        code, _, _ = run(capsys, "solve-bvp", "--spec", MODELS / "oscillator.json", "--N", "1")
        assert code == 2

    def test_cli_overrides(self, capsys):
        code, out, _ = run(capsys, "solve-bvp", "--spec", MODELS / "oscillator.json", "--q0", "0", "--q1", "1",
                           "--s-span", "0", "1", "--N", "16", "--format", "json")
        data = json.loads(out)
        assert code == 0 and len(data["rows"]) == 17
        assert data["omega"]["newton_iterations"] == 1


class TestDarbouxCommand:
    def test_forward(self, capsys):
        code, out, _ = run(capsys, "darboux", "--spec", MODELS / "free_particle.json", "--point", "3,2,1")
        header, rows = read_csv(out)
        assert code == 0 and header == ["q", "p", "s", "Q", "P", "W", "Qt", "Pt", "Wt"]
        assert rows[0].tolist() == [3, 2, 1, 1, 2, 2, 1, 2, 3]

    def test_inverse(self, capsys):
        code, out, _ = run(capsys, "darboux", "--spec", MODELS / "free_particle.json", "--inverse", "--point", "1,2,2")
        _, rows = read_csv(out)
        assert code == 0 and rows[0][3:].tolist() == [3, 2, 1]

    def test_inverse_at_zero_momentum(self, capsys):
        code, _, err = run(capsys, "darboux", "--spec", MODELS / "free_particle.json", "--inverse", "--point", "1,0,2")
        assert code == 3 and "P = 0" in err

    def test_needs_free_particle(self, capsys):
        code, _, _ = run(capsys, "darboux", "--spec", MODELS / "oscillator.json", "--point", "1,1,1")
        assert code == 2


class TestVerifyCommand:
    def test_darboux_suite(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, _, _ = run(capsys, "verify", "--suite", "darboux", "--seed", "3", "--out", out)
        report = json.loads(out.read_text())
        assert code == 0 and report["passed"] and report["seed"] == 3

    def test_report_shape(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "omega", "--spec", MODELS / "oscillator.json")
        report = json.loads(out)
        assert code == 0
        assert set(report) == {"suite", "seed", "samples", "model", "passed", "checks"}
        for c in report["checks"]:
            assert {"name", "max_residual", "threshold", "passed"} <= set(c)
            assert c["max_residual"] < c["threshold"]
        spread = next(c for c in report["checks"] if c["name"] == "omega.node-spread")
        assert spread["max_residual"] < 1e-8

    def test_probe_at_degenerate_point_fails(self, capsys):
        code, out, err = run(capsys, "verify", "--suite", "contact", "--spec", MODELS / "free_particle_probe.json",
                             "--samples", "5")
        assert code == 1 and "DegeneracyError" in out + err
