import json

from hybridopt import default_config
from hybridopt.cli import main
from hybridopt.config import format_parameter_file


def _switches(values):
    out = []
    for key, val in values.items():
        out += [f"--{key}", str(val)]
    return out


def test_target_runner_prints_single_cost(capsys):
    values = default_config({"exec.order": "de", "pop.size": "10"})
    code = main(["target-runner", "c7", "sphere:3:0", "42", "--",
                 *_switches(values)])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 1
    cost = float(lines[0])
    assert cost <= 1e10


def test_target_runner_deterministic(capsys):
    values = default_config({"exec.order": "de", "pop.size": "10"})
    main(["target-runner", "c7", "sphere:3:0", "42", "--", *_switches(values)])
    first = capsys.readouterr().out
    main(["target-runner", "c7", "sphere:3:0", "42", "--", *_switches(values)])
    second = capsys.readouterr().out
    assert first == second


def test_target_runner_rejects_bad_parameter(capsys):
    values = default_config({"exec.order": "cmaes"})
    values["cmaes.a"] = "12"
    code = main(["target-runner", "c1", "sphere:3", "1", "--",
                 *_switches(values)])
    captured = capsys.readouterr()
    assert code != 0
    assert captured.out == ""
    assert "cmaes.a" in captured.err


def test_export_space_command(capsys):
    assert main(["export-space", "--format", "json"]) == 0
    entries = json.loads(capsys.readouterr().out)
    assert any(e["name"] == "exec.mode" for e in entries)


def test_run_command_writes_records(tmp_path, capsys):
    params = tmp_path / "algo.params"
    params.write_text(format_parameter_file(
        default_config({"exec.order": "de", "pop.size": "10"})))
    out = tmp_path / "result.csv"
    code = main(["run", "--function", "shifted_sphere", "--dim", "3",
                 "--seed", "5", "--params", str(params),
                 "--fe-budget", "500", "--out", str(out), "--format", "csv"])
    assert code == 0
    text = out.read_text()
    assert text.startswith("function,dim,seed,config,best_fitness,evals,wall_ms")
    assert "shifted_sphere,3,5," in text


def test_run_command_validation_failure(tmp_path, capsys):
    params = tmp_path / "bad.params"
    values = default_config({"exec.order": "de"})
    values["de.beta"] = "7"
    params.write_text(format_parameter_file(values))
    code = main(["run", "--function", "sphere", "--dim", "3", "--seed", "1",
                 "--params", str(params), "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "de.beta" in capsys.readouterr().err


def test_batch_command(tmp_path, capsys):
    plan = [{"config_id": "d", "params": default_config(
        {"exec.order": "de", "pop.size": "10"}),
        "function": "sphere", "dim": 2, "seeds": [1, 2], "fe_budget": 400}]
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(plan))
    out = tmp_path / "records.json"
    code = main(["batch", "--plan", str(plan_path), "--parallel", "1",
                 "--out", str(out), "--format", "json"])
    assert code == 0
    records = json.loads(out.read_text())
    assert len(records) == 2
