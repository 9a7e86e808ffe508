import json

import numpy as np
import pytest

from mpckclust import Dataset, ParameterError
from mpckclust import cli
from mpckclust.datagen import KINDS, generate
from mpckclust.io import load_dataset, load_matrix, save_dataset
from mpckclust.lemmas import PropertyReport
from mpckclust.report import SCHEMA, RunReport


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


def report(out) -> RunReport:
    return RunReport.from_json(out.out)


def test_gen_line_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "gen", "line", 3, a)[0] == 0
    assert len(a.read_text().splitlines()) == 3
    run(capsys, "gen", "gaussian-mixture", 50, a, "--seed", 4)
    run(capsys, "gen", "gaussian-mixture", 50, b, "--seed", 4)
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("kind", KINDS)
def test_generate_kinds(kind):
    P = generate(kind, 17, 3, seed=1)
    assert P.n == 17 and P.dim == 3


def test_generate_unknown_kind():
    with pytest.raises(ParameterError):
        generate("spiral", 5)


def test_io_roundtrip(tmp_path):
    P = Dataset(np.random.default_rng(0).normal(size=(6, 2)))
    for name in ("p.csv", "p.json"):
        save_dataset(P, tmp_path / name)
        assert np.array_equal(load_dataset(tmp_path / name).points, P.points)
    (tmp_path / "m.csv").write_text("0,1\n1,0\n")
    assert load_matrix(tmp_path / "m.csv").dist(0, 1) == 1


def test_solve_json_and_oracle_ratio(tmp_path, capsys):
    path = tmp_path / "g.csv"
    run(capsys, "gen", "gaussian-mixture", 12, path, "--clusters", 3, "--seed", 2)
    code, out = run(capsys, "solve", path, "--k", 3, "--oracle")
    assert code == 0
    rep = report(out)
    assert rep.schema == SCHEMA and rep.command == "solve"
    assert 1 <= len(rep.outputs["centers"]) <= 3
    assert rep.costs["opt"] <= rep.costs["cost"]
    assert np.isfinite(rep.ratios["cost_over_opt"])
    assert rep.params["k"] == 3 and rep.params["gamma"] == 8.0 and rep.params["z"] == 1
    assert RunReport.from_json(rep.to_json()) == rep


def test_solve_is_deterministic(tmp_path, capsys):
    path = tmp_path / "u.csv"
    run(capsys, "gen", "uniform-cube", 40, path)
    reps = []
    for _ in range(2):
        rep = report(run(capsys, "solve", path, "--k", 4, "--mpc-s", 64)[1])
        rep.wall_time = 0.0
        reps.append(rep)
    assert reps[0] == reps[1]
    assert reps[0].stats["peak_local"] <= 64


def test_solve_csv_and_cost_modeled(tmp_path, capsys):
    path = tmp_path / "u.csv"
    run(capsys, "gen", "uniform-cube", 30, path)
    code, out = run(capsys, "solve", path, "--k", 2, "--out", "csv", "--backend", "cost-modeled")
    assert code == 0
    header = out.out.splitlines()[0].split(",")
    assert "costs.cost" in header and "outputs.centers" in header


def test_solve_matrix_input(tmp_path, capsys):
    path = tmp_path / "m.csv"
    path.write_text("0,1,9\n1,0,8\n9,8,0\n")
    code, out = run(capsys, "solve", path, "--matrix", "--k", 2, "--gamma", 2)
    assert code == 0 and report(out).costs["cost"] > 0


def test_exit_codes(tmp_path, capsys):
    path = tmp_path / "l.csv"
    run(capsys, "gen", "line", 10, path)
    assert run(capsys, "solve", path, "--k", 11)[0] == 2
    assert run(capsys, "solve", tmp_path / "missing.csv", "--k", 2)[0] == 2
    assert run(capsys, "solve", path, "--k", 2, "--mpc-s", 8)[0] == 3
    with pytest.raises(SystemExit) as exc:
        cli.main(["solve"])
    assert exc.value.code == 2


def test_duplicate_points_are_usage_errors(tmp_path, capsys):
    path = tmp_path / "d.csv"
    path.write_text("0\n0\n1\n")
    assert run(capsys, "solve", path, "--k", 2)[0] == 2


def test_identical_points_cost_zero(tmp_path, capsys):
    path = tmp_path / "same.csv"
    path.write_text("3,3\n3,3\n")
    code, out = run(capsys, "solve", path, "--k", 1)
    assert code == 0 and report(out).costs["cost"] == 0


def test_value(tmp_path, capsys):
    path = tmp_path / "g.csv"
    run(capsys, "gen", "gaussian-mixture", 20, path)
    rep = report(run(capsys, "value", path, "--k", 4, "--gamma", 2, "--alpha-scale", 2)[1])
    assert rep.outputs["eta"] > 0 and rep.params["alpha_scale"] == 2


def test_verify_default_battery(capsys):
    code, out = run(capsys, "verify", "--instances", 4)
    rep = report(out)
    assert code == 0 and rep.outputs["passed"] and rep.rows


def test_verify_failure_exit_code(monkeypatch, capsys):
    def failing(count, seed, suites):
        rep = PropertyReport()
        rep.entry("broken").update(2.0, 1.0)
        return rep

    monkeypatch.setattr(cli, "run_battery", failing)
    code, out = run(capsys, "verify")
    assert code == 1 and report(out).outputs["failures"] == ["broken"]


def test_bench_small_grid(capsys):
    code, out = run(capsys, "bench", "--n", 128, 256, "--s", 64, 4096, "--k", 3)
    rep = report(out)
    assert code == 0 and rep.outputs["monotone_in_s"]
    assert len(rep.rows) == 4
    assert all(r["peak_local"] <= r["s"] for r in rep.rows)


def test_report_schema_guard():
    d = RunReport("solve").to_dict()
    d["schema"] = "other/9"
    with pytest.raises(ValueError):
        RunReport.from_dict(d)
    assert json.loads(RunReport("x").to_json())["schema"] == SCHEMA
