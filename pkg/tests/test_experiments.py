import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from teamquant.exceptions import ConfigError, InvalidParameter, NonFiniteCost, StepFailed
from teamquant.experiments import (
    CSV_COLUMNS,
    DEFAULT_SCHEDULE,
    EvalSettings,
    ExperimentConfig,
    OutputSettings,
    RefinementSchedule,
    SolverSettings,
    apply_env,
    embed_policy,
    emit_all,
    emit_report,
    load_config,
    parse_config,
    read_reports,
    reports_to_csv,
    run_schedule,
)
from teamquant.evaluator import affine_oracle_witsenhausen, extend_policy
from teamquant.finite import PolicyTable, uniform_model
from teamquant.problems import RadnerParams, RelayParams, WitsenhausenParams, make_problem
from teamquant.team import static_reduce

TINY = RefinementSchedule(((1.0, 2, 1.0, 3), (2.0, 4, 1.0, 5)))


def tiny_config(**kw):
    base = ExperimentConfig(
        problem=WitsenhausenParams(0.5),
        schedule=TINY,
        solver=SolverSettings(starts=2, warm_start=False),
        evaluation=EvalSettings(mc_samples=5000, quadrature_nodes=16),
    )
    return replace(base, **kw)


def test_default_schedule_is_nested():
    assert len(DEFAULT_SCHEDULE) == 5
    assert DEFAULT_SCHEDULE.steps[-1].n == 64 and DEFAULT_SCHEDULE.steps[-1].k == 65


def test_schedule_rejects_non_nested_steps():
    with pytest.raises(InvalidParameter):
        RefinementSchedule(((2.0, 4, 1.0, 3), (3.0, 8, 1.0, 5)))
    with pytest.raises(InvalidParameter):
        RefinementSchedule(((1.0, 2, 1.0, 5), (1.0, 4, 3.0, 5)))  # 0.5 is not on the new grid
    with pytest.raises(InvalidParameter):
        RefinementSchedule(())
    RefinementSchedule(((2.0, 4, 1.0, 3), (3.0, 8, 1.0, 5)), nested=False)


@pytest.mark.parametrize("params", [WitsenhausenParams(0.1), RelayParams(4, (0.1, 0.2, 0.3)), RadnerParams(0.5)])
def test_ini_roundtrip(params):
    cfg = ExperimentConfig(
        problem=params,
        schedule=RefinementSchedule(((1.0, 2, 0.5, 3), (2.0, 4, 0.5, 5)), nested=True),
        solver=SolverSettings(method="auto", starts=3, seed=4, tol=1e-9, max_sweeps=7,
                              warm_start=False, exhaustive_cap=99, threads=2),
        evaluation=EvalSettings(mc_samples=1234, seed=8, quadrature_nodes=12),
        output=OutputSettings(directory="out dir", formats=("json",), record_timing=True),
    )
    text = cfg.to_ini()
    assert parse_config(text) == cfg
    assert parse_config(parse_config(text).to_ini()).to_ini() == text
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_empty_config_gives_defaults():
    assert parse_config("") == ExperimentConfig()


@pytest.mark.parametrize(
    "text",
    [
        "[problem]\nbogus = 1\n",
        "[mystery]\na = 1\n",
        "[problem]\nkind = nope\n",
        "[problem]\nkind = radner\nweight = 1\n",
        "[solver]\nstarts = many\n",
        "[solver]\nwarm_start = maybe\n",
        "[solver]\nmethod = anneal\n",
        "[schedule]\nradius = 1, 2\nn = 2, 4\nm = 1, 1\n",
        "[schedule]\nradius = 1, 2\nn = 2, 4\nm = 1\nk = 3, 5\n",
        "[schedule]\nradius = 2, 3\nn = 4, 8\nm = 1, 1\nk = 3, 5\n",
        "[problem]\nkind = relay\nweights = 0.1\n",
        "[problem]\nweight = -1\n",
        "[output]\nformats = csv, xml\n",
        "not an ini file",
    ],
)
def test_bad_configs_raise_config_error(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_env_overrides():
    cfg = apply_env(ExperimentConfig(), {"TEAMQ_OUTPUT_DIR": "/tmp/x", "TEAMQ_THREADS": "4"})
    assert cfg.output.directory == "/tmp/x" and cfg.solver.threads == 4
    assert apply_env(ExperimentConfig(), {}) == ExperimentConfig()
    with pytest.raises(ConfigError):
        apply_env(ExperimentConfig(), {"TEAMQ_THREADS": "four"})


def test_run_schedule_reports():
    seen = []
    reps = run_schedule(tiny_config(), on_step=lambda *a: seen.append(a[0]))
    assert seen == [0, 1]
    assert [r.n for r in reps] == [2, 4]
    for r in reps:
        assert r.exact_cost is not None
        assert r.oracle == affine_oracle_witsenhausen(0.5)[1]
        assert r.wall_ms is None
        assert r.mc_consistent
        assert r.model_gap == pytest.approx(abs(r.finite_cost - r.exact_cost))


def test_run_schedule_exhaustive_and_auto():
    ex = run_schedule(tiny_config(solver=SolverSettings(method="exhaustive", warm_start=False)))
    auto = run_schedule(tiny_config(solver=SolverSettings(method="auto", starts=2)))
    assert [r.solver for r in ex] == ["exhaustive"] * 2
    assert [r.finite_cost for r in ex] == [r.finite_cost for r in auto]
    de = run_schedule(tiny_config())
    for a, b in zip(ex, de):
        assert a.finite_cost <= b.finite_cost + 1e-12


def test_timing_recorded_only_on_request():
    reps = run_schedule(tiny_config(output=OutputSettings(record_timing=True)))
    assert all(r.wall_ms > 0 for r in reps)


def test_warm_start_embeds_previous_policy():
    red = static_reduce(make_problem(WitsenhausenParams()))
    coarse = uniform_model(red, 1.0, 2, 1.0, 3)
    fine = uniform_model(red, 2.0, 4, 1.0, 5)
    table = PolicyTable((np.array([1.0, -1.0, 0.0]), np.array([0.0, 1.0, 1.0])))
    warm = embed_policy(extend_policy(table, coarse.quantizers), fine)
    # fine levels -1.5, -0.5, 0.5, 1.5: the outer two fall in the coarse overflow
    np.testing.assert_array_equal(warm.actions[0], [1.0, 1.0, -1.0, 0.0, 1.0])
    np.testing.assert_array_equal(warm.actions[1], [0.0, 0.0, 1.0, 1.0, 0.0])
    reps = run_schedule(tiny_config(solver=SolverSettings(starts=1, warm_start=True)))
    assert len(reps) == 2


def test_failing_step_raises_step_failed():
    sched = RefinementSchedule(((80.0, 4, 60.0, 3),))
    cfg = tiny_config(schedule=sched)
    with pytest.raises(StepFailed) as info:
        run_schedule(cfg)
    assert info.value.step == 0
    assert isinstance(info.value.cause, NonFiniteCost)


def test_emit_formats(tmp_path):
    cfg = tiny_config()
    reps = run_schedule(cfg)
    paths = emit_all(reps, cfg, tmp_path)
    assert sorted(p.name for p in paths) == ["plotdata.txt", "reports.csv", "reports.json"]
    with open(tmp_path / "reports.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][CSV_COLUMNS.index("wall_ms")] == ""
    assert float(rows[2][CSV_COLUMNS.index("exact_cost")]) == reps[1].exact_cost
    plot = (tmp_path / "plotdata.txt").read_text().splitlines()
    assert plot[0].startswith("#") and plot[1].split() == ["0", repr(reps[0].exact_cost)]
    doc = json.loads((tmp_path / "reports.json").read_text())
    assert "threads" not in doc["config"]["solver"]
    cfg2, reps2 = read_reports(tmp_path / "reports.json")
    assert reps2 == reps
    assert cfg2.problem == cfg.problem and cfg2.schedule == cfg.schedule
    with pytest.raises(InvalidParameter):
        emit_report(reps, "xml", tmp_path / "x")
    with pytest.raises(InvalidParameter):
        emit_report([], "csv", tmp_path / "x")


def test_relay_reports_have_no_oracle_gap():
    cfg = tiny_config(problem=RelayParams(3, (0.1, 0.1)))
    reps = run_schedule(cfg)
    assert all(r.gap is None for r in reps)
    line = reports_to_csv(reps).splitlines()[1].split(",")
    assert line[CSV_COLUMNS.index("oracle_gap")] == ""


def test_outputs_identical_across_threads(tmp_path):
    cfg = tiny_config(problem=RelayParams(3, (0.1, 0.1)))
    a = emit_all(run_schedule(cfg), cfg, tmp_path / "a")
    cfg3 = replace(cfg, solver=replace(cfg.solver, threads=3))
    b = emit_all(run_schedule(cfg3), cfg3, tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
