"""JSON model files and seeded sampling of chart points.

Model file shape::

    {"kind": "nonrelativistic", "n": 1, "hamiltonian": "p^2/2",
     "exclude": "p == 0", "sample_box": {"q": [-2, 2], "p": [-2, 2], "s": [-1, 1]}}
    {"kind": "relativistic", "mass": 1.0}
    {"kind": "darboux", "n": 1}

Optional keys: ``name``, ``invariants`` (expressions constant along the
dynamics, used by the Poisson-subalgebra checks), ``probes`` (extra points
always included in verification), ``bvp`` (``q_initial``, ``q_final``,
``s_span``, ``N``), ``section_level`` (``c0``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContactJacobiError, PreconditionError
from .expression import Chart, ChartPoint, Expression, evaluate_at, parse_expression
from .extended import SystemSpec, darboux_chart
from .mass_shell import MassShellSpec

KINDS = ("nonrelativistic", "relativistic", "darboux")
DEFAULT_HALF_WIDTH = 2.0
EXCLUDE_MARGIN = 0.25
MAX_REJECTIONS = 100_000


class ConfigError(ContactJacobiError):
    """Malformed model file or option (maps to exit status 2)."""


@dataclass
class ModelConfig:
    kind: str
    name: str
    chart: Chart
    system: SystemSpec | None = None
    shell: MassShellSpec | None = None
    n: int = 1
    exclude: Expression | None = None
    sample_box: dict = field(default_factory=dict)
    invariants: tuple = ()
    probes: tuple = ()
    bvp: dict = field(default_factory=dict)
    section_level: float = 0.0
    raw: dict = field(default_factory=dict)

    def box(self, coord: str) -> tuple[float, float]:
        lo, hi = self.sample_box.get(coord, (-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH))
        return float(lo), float(hi)

    def admissible(self, x, margin: float = EXCLUDE_MARGIN) -> bool:
        if self.exclude is None:
            return True
        return abs(evaluate_at(self.exclude, self.chart.coords, x)) > margin

    def sample(self, rng: np.random.Generator, count: int) -> list[ChartPoint]:
        """``count`` uniform points in the box, rejecting the excluded region."""
        lows, highs = zip(*(self.box(c) for c in self.chart.coords))
        out = []
        tries = 0
        while len(out) < count:
            x = rng.uniform(lows, highs)
            tries += 1
            if tries > MAX_REJECTIONS:
                raise PreconditionError("sample box lies (almost) entirely in the excluded region")
            if self.admissible(x):
                out.append(self.chart.point(x))
        return out

    def probe_points(self) -> list[ChartPoint]:
        return [self.chart.point(np.asarray(p, dtype=float)) for p in self.probes]


def _exclusion(text: str, chart: Chart) -> Expression:
    """``"expr == 0"`` or plain ``"expr"``; the excluded set is ``expr = 0``."""
    lhs, sep, rhs = text.partition("==")
    if sep:
        rhs = rhs.strip()
        if not rhs:
            raise ConfigError("exclude: missing right-hand side after '=='")
        return parse_expression(f"({lhs}) - ({rhs})", chart)
    return parse_expression(text, chart)


def _require(d: dict, key: str, kind: type | tuple):
    if key not in d:
        raise ConfigError(f"missing required key {key!r}")
    v = d[key]
    if not isinstance(v, kind) or isinstance(v, bool):
        raise ConfigError(f"key {key!r} has the wrong type ({type(v).__name__})")
    return v


def model_from_dict(d: dict) -> ModelConfig:
    if not isinstance(d, dict):
        raise ConfigError("model file must contain a JSON object")
    kind = d.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS} (got {kind!r})")
    name = str(d.get("name", kind))
    try:
        if kind == "nonrelativistic":
            n = int(d.get("n", 1))
            system = SystemSpec.from_text(_require(d, "hamiltonian", str), n=n, name=name)
            chart = system.chart
            cfg = ModelConfig(kind, name, chart, system=system, n=n)
        elif kind == "relativistic":
            shell = MassShellSpec(_require(d, "mass", (int, float)))
            cfg = ModelConfig(kind, name, shell.chart, shell=shell, n=3)
        else:
            n = int(d.get("n", 1))
            cfg = ModelConfig(kind, name, darboux_chart(n), n=n)
        chart = cfg.chart
        if "exclude" in d:
            cfg.exclude = _exclusion(_require(d, "exclude", str), chart)
        if cfg.system is not None and cfg.exclude is not None:
            cfg.system = SystemSpec(cfg.system.n, cfg.system.hamiltonian, chart, cfg.exclude, name)
        box = d.get("sample_box", {})
        if not isinstance(box, dict):
            raise ConfigError("sample_box must be an object")
        for c, span in box.items():
            chart.index(c)
            if not (isinstance(span, list) and len(span) == 2 and float(span[0]) < float(span[1])):
                raise ConfigError(f"sample_box[{c!r}] must be [lo, hi] with lo < hi")
        cfg.sample_box = {c: (float(a), float(b)) for c, (a, b) in box.items()}
        cfg.invariants = tuple(parse_expression(t, chart) for t in d.get("invariants", []))
        probes = d.get("probes", [])
        for p in probes:
            if not (isinstance(p, list) and len(p) == chart.dim):
                raise ConfigError(f"each probe needs {chart.dim} coordinates")
        cfg.probes = tuple(tuple(float(v) for v in p) for p in probes)
        cfg.bvp = dict(d.get("bvp", {}))
        cfg.section_level = float(d.get("section_level", 0.0))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, PreconditionError):
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"invalid model file: {exc}") from exc
    cfg.raw = d
    return cfg


def load_model(path) -> ModelConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read model file {str(path)!r}: {exc.strerror}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return model_from_dict(d)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))
