import csv
import io
import json

import pytest

from sparseprox.bench import (
    CSV_COLUMNS,
    ExperimentConfig,
    SolverSpec,
    emit_csv,
    emit_plot,
    run_experiment,
)
from sparseprox.cli import cli_main


def corner_config(**kw):
    base = dict(
        problem={"kind": "corner1d"},
        solvers=[SolverSpec("gist")],
        repetitions=1,
        stop_tol=1e-10,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_experiment_corner_single_row():
    rows, traces = run_experiment(corner_config())
    runs = [r for r in rows if r.kind == "run"]
    assert len(runs) == 1
    assert runs[0].objective == pytest.approx(1.5, abs=1e-10)
    assert runs[0].d_stationary is True
    assert "gist" in traces


def test_run_experiment_requires_solver():
    with pytest.raises(ValueError):
        ExperimentConfig(problem={"kind": "corner1d"}, solvers=[])
    with pytest.raises(ValueError):
        ExperimentConfig(
            problem={"kind": "corner1d"}, solvers=[SolverSpec("nope")]
        )


def test_run_experiment_synthetic_common_start_and_means():
    cfg = ExperimentConfig(
        problem={"kind": "synthetic_ls", "p": 40, "n": 40, "k": 8, "lam": 4.0},
        solvers=[SolverSpec("gist"), SolverSpec("pgm")],
        repetitions=3,
        base_seed=11,
        stop_tol=1e-8,
    )
    rows, _ = run_experiment(cfg)
    runs = [r for r in rows if r.kind == "run"]
    means = [r for r in rows if r.kind == "mean"]
    assert len(runs) == 6 and len(means) == 2
    # same instance id per repetition across solvers (shared start protocol)
    by_seed = {}
    for r in runs:
        by_seed.setdefault(r.seed, set()).add(r.instance_id)
    assert all(len(ids) == 1 for ids in by_seed.values())
    assert any("iterations" in m.best for m in means)


def test_certificates_recomputed_on_rows():
    cfg = corner_config(solvers=[SolverSpec("pdca", {"subgradient_policy": "extreme_negative",
                                                     "stop_tol": -1.0, "max_iters": 50})])
    rows, _ = run_experiment(cfg)
    row = [r for r in rows if r.kind == "run"][0]
    assert row.critical is True and row.d_stationary is False
    assert row.objective == 2.0


def test_robust_problem_rows_have_z_column():
    cfg = ExperimentConfig(
        problem={
            "kind": "synthetic_robust", "p": 24, "n": 12, "k": 3, "kappa": 2,
            "lam1": 60.0,
        },
        solvers=[SolverSpec("gpalm"), SolverSpec("pdcae_proj")],
        repetitions=2,
        stop_tol=1e-6,
    )
    rows, _ = run_experiment(cfg)
    runs = [r for r in rows if r.kind == "run"]
    assert all(r.l0_z is not None for r in runs)
    assert all(r.l0_z <= 2 for r in runs)


def test_emit_csv_roundtrips_floats():
    rows, _ = run_experiment(corner_config())
    text = emit_csv(rows)
    reader = csv.DictReader(io.StringIO(text))
    parsed = list(reader)
    assert reader.fieldnames == list(CSV_COLUMNS)
    run_rows = [r for r in rows if r.kind == "run"]
    assert float(parsed[0]["objective"]) == run_rows[0].objective
    assert float(parsed[0]["wall_time_sec"]) == run_rows[0].wall_time_sec


def test_emit_csv_empty_rows_error():
    with pytest.raises(ValueError):
        emit_csv([])


def test_bench_deterministic_outside_time_columns():
    cfg = dict(
        problem={"kind": "synthetic_ls", "p": 30, "n": 30, "k": 5, "lam": 3.0},
        solvers=[SolverSpec("gist"), SolverSpec("pdcae")],
        repetitions=2,
        base_seed=3,
        stop_tol=1e-8,
    )
    texts = []
    time_col = CSV_COLUMNS.index("wall_time_sec")
    best_col = CSV_COLUMNS.index("best")
    for _ in range(2):
        rows, _ = run_experiment(ExperimentConfig(**cfg))
        lines = []
        for line in emit_csv(rows).splitlines():
            cells = line.split(",")
            cells[time_col] = ""
            cells[best_col] = ";".join(
                m for m in cells[best_col].split(";") if m != "wall_time_sec"
            )
            lines.append(",".join(cells))
        texts.append("\n".join(lines))
    assert texts[0] == texts[1]


def test_emit_plot_polylines_and_determinism():
    rows, traces = run_experiment(
        corner_config(solvers=[SolverSpec("gist"), SolverSpec("pgm")])
    )
    svg = emit_plot(traces)
    assert svg.count("<polyline") == 2
    assert "gist" in svg and "pgm" in svg
    assert svg == emit_plot(traces)
    with pytest.raises(ValueError):
        emit_plot({})


def test_emit_plot_vertex_count_matches_trace():
    from sparseprox.solvers import IterateTrace

    trace = IterateTrace()
    for t, F in enumerate([4.0, 2.0, 1.5]):
        trace.append(t, F, F)
    svg = emit_plot({"solo": trace})
    polyline = svg.split("<polyline")[1].split("/>")[0]
    points = polyline.split('points="')[1].split('"')[0].split()
    assert len(points) == 3


def test_dataset_four_solver_race_plot(tmp_path):
    from sparseprox.data_io import gen_sparse_ls_instance, save_instance

    inst = gen_sparse_ls_instance(60, 80, 9, 10.0, seed=42)
    prefix = str(tmp_path / "ds")
    save_instance(inst, prefix)
    cfg = ExperimentConfig(
        problem={"kind": "dataset", "path": prefix + ".libsvm", "lam": 10.0, "k": 9},
        solvers=[SolverSpec(n) for n in ("gist", "pgm", "pdcae", "nepdca")],
        repetitions=1,
        stop_tol=1e-6,
    )
    rows, traces = run_experiment(cfg)
    svg = emit_plot(traces)
    assert svg.count("<polyline") == 4
    runs = {r.solver: r for r in rows if r.kind == "run"}
    assert all(runs["gist"].objective <= r.objective + 1e-9 for r in runs.values())
    assert runs["gist"].l0_x == 9


def test_cli_solve_corner_stall(capsys):
    code = cli_main([
        "solve", "--problem", "corner1d", "--solver", "pdca",
        "--subgrad", "extreme_negative", "--x0", "0", "--tol", "-1",
        "--max-iters", "200",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["objective"] == 2.0
    assert payload["certificate"]["critical"] is True
    assert payload["certificate"]["d_stationary"] is False


def test_cli_bench_missing_config(capsys):
    assert cli_main(["bench", "--config", "missing.toml"]) == 1
    assert "config file not found" in capsys.readouterr().err


def test_cli_usage_error_exit_code():
    assert cli_main(["solve", "--problem", "nope", "--solver", "gist"]) == 1


def test_cli_print_schema(capsys):
    assert cli_main(["bench", "--print-schema"]) == 0
    out = capsys.readouterr().out
    assert "[problem]" in out and "[[solvers]]" in out


def test_cli_bench_end_to_end(tmp_path, capsys):
    config = tmp_path / "exp.toml"
    config.write_text(
        """
[problem]
kind = "synthetic_ls"
p = 30
n = 30
k = 5
lam = 3.0

[run]
repetitions = 2
base_seed = 1
stop_tol = 1e-8

[[solvers]]
name = "gist"

[[solvers]]
name = "pgm"

[output]
directory = "%s"
""" % str(tmp_path / "out")
    )
    assert cli_main(["bench", "--config", str(config)]) == 0
    report = tmp_path / "out" / "report.csv"
    svg = tmp_path / "out" / "convergence.svg"
    assert report.exists() and svg.exists()
    lines = report.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 4 + 2  # header + runs + means


def test_cli_gen_then_solve_dataset(tmp_path, capsys):
    prefix = str(tmp_path / "gen")
    assert cli_main([
        "gen", "--kind", "sparse", "--p", "15", "--n", "15", "--k", "3",
        "--lam", "2.0", "--seed", "4", "--out", prefix,
    ]) == 0
    capsys.readouterr()
    assert cli_main([
        "solve", "--problem", "dataset", "--dataset", prefix + ".libsvm",
        "--solver", "gist", "--k", "3", "--lam", "2.0",
    ]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "converged"


def test_cli_certify_planted(capsys):
    assert cli_main([
        "certify", "--problem", "synth", "--p", "15", "--n", "15", "--k", "3",
        "--lam", "2.0", "--seed", "4", "--point", "planted", "--tol", "1e-8",
    ]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["critical"] is True
    assert payload["d_stationary"] is False


def test_cli_prox_oracle_agrees(capsys):
    assert cli_main([
        "prox-oracle", "--mode", "prox", "--y", "3,0.5,-2", "--tau", "1", "--k", "1",
    ]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["agree"] is True
    assert payload["fast"] == [3.0, 0.0, -1.0]


def test_cli_active_set_oracle(capsys):
    assert cli_main([
        "prox-oracle", "--mode", "active-set", "--y", "1,0,0,0", "--k", "2",
    ]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["count"] == 6 and payload["agree"] is True
