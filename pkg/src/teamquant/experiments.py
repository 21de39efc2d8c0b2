"""Refinement schedules and their configuration, plus report writers.

Configuration is an INI file with the sections ``problem``, ``schedule``,
``solver``, ``evaluation`` and ``output``. Every key is optional, and any
key or section not listed below is an error::

    [problem]
    kind = witsenhausen          ; witsenhausen | relay | radner
    weight = 1.0                 ; witsenhausen
    num_agents = 3               ; relay
    weights = 0.1, 0.1           ; relay, one per non-final agent
    r = 0.1                      ; radner

    [schedule]
    radius = 1, 2, 2, 4, 8
    n = 4, 8, 16, 32, 64
    m = 1, 2, 2, 2, 2
    k = 5, 9, 17, 33, 65
    nested = true

    [solver]
    method = descent             ; descent | exhaustive | auto
    starts = 16
    seed = 0
    tol = 1e-10
    max_sweeps = 500
    warm_start = true
    exhaustive_cap = 100000
    threads = 1

    [evaluation]
    mc_samples = 100000
    seed = 1
    quadrature_nodes = 64

    [output]
    directory = results
    formats = csv, json, plotdata
    record_timing = false

``TEAMQ_OUTPUT_DIR`` and ``TEAMQ_THREADS`` override ``output.directory``
and ``solver.threads``.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .evaluator import CostReport, exact_cost, extend_policy, reference_oracle
from .exceptions import ConfigError, InvalidParameter, StepFailed, TeamQuantError
from .finite import (
    DEFAULT_QUADRATURE_NODES,
    PolicyTable,
    eval_finite_cost,
    policy_space_size,
    uniform_model,
)
from .problems import WitsenhausenParams, make_problem, params_from_dict, params_to_dict
from .quantizer import make_action_grid, make_uniform_quantizer, nearest_grid_point
from .solver import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, exhaustive_solve, multi_start_solve
from .team import eval_cost_dynamic_mc, static_reduce

log = logging.getLogger(__name__)

ENV_OUTPUT_DIR = "TEAMQ_OUTPUT_DIR"
ENV_THREADS = "TEAMQ_THREADS"

CSV_COLUMNS = (
    "step", "radius", "n", "m", "k", "finite_cost", "exact_cost", "mc_cost", "mc_ci",
    "oracle_gap", "sweeps", "wall_ms", "model_gap",
)
FORMATS = ("csv", "json", "plotdata")
_SUFFIX = {"csv": "reports.csv", "json": "reports.json", "plotdata": "plotdata.txt"}


@dataclass(frozen=True)
class Step:
    radius: float
    n: int
    m: float
    k: int


@dataclass(frozen=True)
class RefinementSchedule:
    steps: tuple
    nested: bool = True

    def __post_init__(self):
        steps = tuple(s if isinstance(s, Step) else Step(*s) for s in self.steps)
        object.__setattr__(self, "steps", steps)
        if not steps:
            raise InvalidParameter("a schedule needs at least one step")
        qs = [make_uniform_quantizer(s.radius, s.n) for s in steps]
        gs = [make_action_grid(s.m, s.k, nested=self.nested) for s in steps]
        if self.nested:
            for i in range(1, len(steps)):
                if not qs[i].refines(qs[i - 1]):
                    raise InvalidParameter(f"step {i}: observation cells do not refine step {i - 1}")
                if not gs[i - 1].issubset(gs[i]):
                    raise InvalidParameter(f"step {i}: action grid does not contain step {i - 1}'s")

    def __len__(self):
        return len(self.steps)


DEFAULT_SCHEDULE = RefinementSchedule(
    steps=((1.0, 4, 1.0, 5), (2.0, 8, 2.0, 9), (2.0, 16, 2.0, 17), (4.0, 32, 2.0, 33), (8.0, 64, 2.0, 65)),
    nested=True,
)


@dataclass(frozen=True)
class SolverSettings:
    method: str = "descent"
    starts: int = 16
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    warm_start: bool = True
    exhaustive_cap: int = 100_000
    threads: int = 1

    def __post_init__(self):
        if self.method not in ("descent", "exhaustive", "auto"):
            raise InvalidParameter(f"unknown solver method {self.method!r}")


@dataclass(frozen=True)
class EvalSettings:
    mc_samples: int = 100_000
    seed: int = 1
    quadrature_nodes: int = DEFAULT_QUADRATURE_NODES


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "results"
    formats: tuple = FORMATS
    record_timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "formats", tuple(self.formats))
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise InvalidParameter(f"unknown output formats {sorted(bad)}")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: object = field(default_factory=WitsenhausenParams)
    schedule: RefinementSchedule = DEFAULT_SCHEDULE
    solver: SolverSettings = field(default_factory=SolverSettings)
    evaluation: EvalSettings = field(default_factory=EvalSettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    def to_dict(self, runtime=True):
        """Plain-data form. ``runtime=False`` drops settings that cannot change
        any result (thread count, output directory), so that recorded
        configurations compare equal across machines."""
        d = {
            "problem": params_to_dict(self.problem),
            "schedule": {
                "steps": [[s.radius, s.n, s.m, s.k] for s in self.schedule.steps],
                "nested": self.schedule.nested,
            },
            "solver": _plain(self.solver),
            "evaluation": _plain(self.evaluation),
            "output": _plain(self.output),
        }
        if not runtime:
            del d["solver"]["threads"], d["output"]["directory"]
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            sched = d["schedule"]
            return cls(
                problem=params_from_dict(d["problem"]),
                schedule=RefinementSchedule(tuple(tuple(s) for s in sched["steps"]), sched["nested"]),
                solver=SolverSettings(**d["solver"]),
                evaluation=EvalSettings(**d["evaluation"]),
                output=OutputSettings(**d["output"]),
            )
        except (KeyError, TypeError, InvalidParameter) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from None

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        prob = params_to_dict(self.problem)
        cp["problem"] = {k: _ini_value(v) for k, v in prob.items()
                         if k not in ("state_std", "noise_std")}
        steps = self.schedule.steps
        cp["schedule"] = {
            "radius": _ini_value([s.radius for s in steps]),
            "n": _ini_value([s.n for s in steps]),
            "m": _ini_value([s.m for s in steps]),
            "k": _ini_value([s.k for s in steps]),
            "nested": _ini_value(self.schedule.nested),
        }
        for name in ("solver", "evaluation", "output"):
            cp[name] = {k: _ini_value(v) for k, v in _plain(getattr(self, name)).items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _plain(obj):
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def _ini_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ", ".join(_ini_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _convert(section, key, text, kind):
    try:
        if kind is bool:
            low = text.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(text)
            return low in ("true", "yes", "1", "on")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind == "floats":
            return tuple(float(t) for t in _split(text))
        if kind == "ints":
            return tuple(int(t) for t in _split(text))
        if kind == "words":
            return tuple(_split(text))
        return text.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {text!r}") from None


_PROBLEM_KEYS = {
    "witsenhausen": {"weight": float},
    "relay": {"num_agents": int, "weights": "floats"},
    "radner": {"r": float},
}
_SCHEDULE_KEYS = {"radius": "floats", "n": "ints", "m": "floats", "k": "ints", "nested": bool}
_SECTION_TYPES = {
    "solver": (SolverSettings, {"method": str, "starts": int, "seed": int, "tol": float,
                                "max_sweeps": int, "warm_start": bool, "exhaustive_cap": int,
                                "threads": int}),
    "evaluation": (EvalSettings, {"mc_samples": int, "seed": int, "quadrature_nodes": int}),
    "output": (OutputSettings, {"directory": str, "formats": "words", "record_timing": bool}),
}


def _read_section(cp, name, allowed):
    if not cp.has_section(name):
        return {}
    out = {}
    for key, text in cp.items(name):
        if key not in allowed:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        out[key] = _convert(name, key, text, allowed[key])
    return out


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    known = {"problem", "schedule", *_SECTION_TYPES}
    for section in cp.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
    try:
        kind = cp.get("problem", "kind", fallback="witsenhausen").strip()
        if kind not in _PROBLEM_KEYS:
            raise ConfigError(f"[problem] unknown kind {kind!r}")
        prob = _read_section(cp, "problem", {"kind": str, **_PROBLEM_KEYS[kind]})
        prob["kind"] = kind
        problem = params_from_dict(prob)

        sched = _read_section(cp, "schedule", _SCHEDULE_KEYS)
        nested = sched.pop("nested", DEFAULT_SCHEDULE.nested)
        if sched:
            cols = [sched.get(c) for c in ("radius", "n", "m", "k")]
            if any(c is None for c in cols):
                raise ConfigError("[schedule] radius, n, m and k must be given together")
            if len({len(c) for c in cols}) != 1:
                raise ConfigError("[schedule] radius, n, m and k must have equal lengths")
            schedule = RefinementSchedule(tuple(zip(*cols)), nested)
        else:
            schedule = replace(DEFAULT_SCHEDULE, nested=nested)

        parts = {}
        for name, (cls, allowed) in _SECTION_TYPES.items():
            parts[name] = cls(**_read_section(cp, name, allowed))
    except ConfigError:
        raise
    except (InvalidParameter, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(problem, schedule, parts["solver"], parts["evaluation"], parts["output"])


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def apply_env(cfg: ExperimentConfig, environ=None) -> ExperimentConfig:
    environ = os.environ if environ is None else environ
    out, solver = cfg.output, cfg.solver
    if environ.get(ENV_OUTPUT_DIR):
        out = replace(out, directory=environ[ENV_OUTPUT_DIR])
    if environ.get(ENV_THREADS):
        try:
            threads = int(environ[ENV_THREADS])
        except ValueError:
            raise ConfigError(f"{ENV_THREADS} must be an integer") from None
        solver = replace(solver, threads=threads)
    return replace(cfg, output=out, solver=solver)


def embed_policy(prev, fm) -> PolicyTable:
    """Carry an extended policy onto a finer model's symbols, snapped to its grids."""
    rows = []
    for i, q in enumerate(fm.quantizers):
        acts = np.r_[prev.table.actions[i][0], prev.act(i, q.levels)]
        rows.append(nearest_grid_point(fm.grids[i], acts))
    return PolicyTable(tuple(rows))


def solve_step(fm, solver: SolverSettings, seed, warm):
    method = solver.method
    if method == "auto":
        outer = policy_space_size(fm, range(fm.num_agents - 1))
        method = "exhaustive" if outer <= solver.exhaustive_cap else "descent"
    if method == "exhaustive":
        policy, _ = exhaustive_solve(fm, cap=solver.exhaustive_cap)
        return policy, 0, "exhaustive", "exhaustive"
    extra = [warm] if warm is not None else []
    policy, traces = multi_start_solve(
        fm, solver.starts, seed, max_sweeps=solver.max_sweeps, tol=solver.tol,
        threads=solver.threads, extra_inits=extra,
    )
    best = min(traces, key=lambda t: (t.final_cost, t.start))
    return policy, best.sweeps, "descent", best.termination.value


def run_schedule(cfg: ExperimentConfig, on_step=None):
    """Solve every schedule step and cost its extended policy; one ``CostReport`` per step.

    ``on_step(index, model, policy, report)`` is called after each step.
    """
    problem = make_problem(cfg.problem)
    reduced = static_reduce(problem)
    oracle = reference_oracle(cfg.problem)
    nested = cfg.schedule.nested
    reports, prev = [], None
    for idx, st in enumerate(cfg.schedule.steps):
        try:
            t0 = time.perf_counter()
            fm = uniform_model(reduced, st.radius, st.n, st.m, st.k, nested=nested,
                               quadrature_nodes=cfg.evaluation.quadrature_nodes)
            warm = embed_policy(prev, fm) if (cfg.solver.warm_start and prev is not None) else None
            step_seed = np.random.SeedSequence([cfg.solver.seed, idx])
            policy, sweeps, solver_name, termination = solve_step(fm, cfg.solver, step_seed, warm)
            finite = eval_finite_cost(fm, policy)
            ext = extend_policy(policy, fm.quantizers)
            exact = exact_cost(problem, ext)
            mc, ci = eval_cost_dynamic_mc(
                problem, ext, cfg.evaluation.mc_samples,
                np.random.SeedSequence([cfg.evaluation.seed, idx]), threads=cfg.solver.threads,
            )
            wall = (time.perf_counter() - t0) * 1e3 if cfg.output.record_timing else None
        except TeamQuantError as exc:
            raise StepFailed(idx, exc) from exc
        report = CostReport(
            step=idx, radius=st.radius, n=st.n, m=st.m, k=st.k, finite_cost=finite,
            exact_cost=exact, mc_cost=mc, mc_half_ci95=ci, oracle=oracle, sweeps=sweeps,
            solver=solver_name, termination=termination, wall_ms=wall,
        )
        if not report.mc_consistent:
            log.warning("step %d: Monte Carlo %.6g disagrees with exact %.6g", idx, mc, exact)
        log.info("step %d: finite %.6g exact %s", idx, finite, exact)
        reports.append(report)
        prev = ext
        if on_step is not None:
            on_step(idx, fm, policy, report)
    return reports


def _csv_value(v):
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([_csv_value(v) for v in (
            r.step, r.radius, r.n, r.m, r.k, r.finite_cost, r.exact_cost, r.mc_cost,
            r.mc_half_ci95, r.gap, r.sweeps, r.wall_ms, r.model_gap)])
    return buf.getvalue()


def reports_to_json(reports, config: ExperimentConfig | None = None) -> str:
    doc = {
        "config": config.to_dict(runtime=False) if config is not None else None,
        "reports": [r.to_dict() for r in reports],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def reports_to_plotdata(reports) -> str:
    lines = ["# refinement_index exact_cost"]
    for i, r in enumerate(reports):
        lines.append(f"{i} {_csv_value(r.exact_cost) or 'nan'}")
    return "\n".join(lines) + "\n"


def emit_report(reports, fmt, path, config=None) -> Path:
    if not reports:
        raise InvalidParameter("no reports to emit")
    if fmt == "csv":
        text = reports_to_csv(reports)
    elif fmt == "json":
        text = reports_to_json(reports, config)
    elif fmt == "plotdata":
        text = reports_to_plotdata(reports)
    else:
        raise InvalidParameter(f"unknown format {fmt!r}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        # newline="" keeps the CSV writer's CRLF row endings intact
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {fmt} report to {path}: {exc}") from exc
    return path


def emit_all(reports, cfg: ExperimentConfig, directory=None):
    directory = Path(directory or cfg.output.directory)
    return [emit_report(reports, fmt, directory / _SUFFIX[fmt], cfg) for fmt in cfg.output.formats]


def read_reports(path):
    """Load a JSON report file; returns ``(config or None, reports)``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameter(f"cannot read reports from {path}: {exc}") from None
    try:
        cfg = ExperimentConfig.from_dict(doc["config"]) if doc.get("config") else None
        return cfg, [CostReport.from_dict(r) for r in doc["reports"]]
    except (KeyError, TypeError, AttributeError) as exc:
        raise InvalidParameter(f"{path} is not a report file: {exc!r}") from None
