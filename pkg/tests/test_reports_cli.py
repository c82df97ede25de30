import csv
import io
import json
from fractions import Fraction

import pytest
from click.testing import CliRunner

from xius.cli import main
from xius.reports import CheckRecord, Report, decimal_string, emit, exact, load_report
from xius.suites import ConfigError, RunConfig, run_suite
from xius.trees import Avg, Leaf, tree_to_json


@pytest.fixture
def runner():
    return CliRunner()


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def sample_report():
    r = Report("demo", {"seed": 1})
    r.add("a claim", "norms", "pass", {"value": Fraction(1, 3), "list": [1, 2]}, slack=Fraction(1, 6))
    r.add("open", "norms", "inconclusive", reason="budget exhausted")
    return r


def test_json_round_trip(tmp_path):
    r = sample_report()
    path = tmp_path / "r.json"
    emit(r, "json", path)
    back = load_report(path)
    assert back.to_json() == r.to_json()
    assert back.status == "inconclusive" and back.exit_code == 3


def test_csv_has_exact_and_decimal_columns():
    rows = list(csv.DictReader(io.StringIO(sample_report().to_csv())))
    value = next(row for row in rows if row["quantity"] == "value")
    assert value["exact"] == "1/3"
    assert value["decimal_approx"].startswith("0.3333")
    assert any(row["quantity"] == "slack" and row["exact"] == "1/6" for row in rows)


def test_empty_report():
    r = Report("empty")
    data = json.loads(r.dumps())
    assert data["records"] == [] and data["status"] == "pass"
    assert r.to_csv().splitlines() == ["claim,anchor,status,quantity,exact,decimal_approx,reason"]


def test_inconclusive_needs_reason():
    with pytest.raises(ValueError):
        CheckRecord("x", "y", "inconclusive")
    with pytest.raises(ValueError):
        CheckRecord("x", "y", "maybe")


def test_exact_and_decimal_helpers():
    assert exact({"a": Fraction(2, 4), "b": (1, Fraction(3))}) == {"a": "1/2", "b": [1, "3"]}
    assert decimal_string(Fraction(1, 8)) == "0.125"
    assert decimal_string("n/a") == ""


def test_run_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig.from_json({"seed": 1, "colour": "red"})
    assert RunConfig.from_json(RunConfig(seed=4).to_json()) == RunConfig(seed=4)


def test_norm_command(runner, tmp_path):
    vec = write(tmp_path, "v.json", {"1": 1, "2": 1, "3": 1, "4": 1})
    res = runner.invoke(main, ["norm", "--params", "toyA", "--vec", vec])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["value"] == "2"
    res = runner.invoke(main, ["norm", "--space", "tildeK", "--params", "toyA", "--vec", vec, "--format", "csv"])
    assert res.exit_code == 0 and "norm in tildeK" in res.output


def test_norm_budget_is_inconclusive(runner, tmp_path):
    vec = write(tmp_path, "v.json", {str(c): 1 for c in range(1, 41)})
    res = runner.invoke(main, ["norm", "--vec", vec, "--budget", "8"])
    assert res.exit_code == 3


def test_usage_errors(runner, tmp_path):
    vec = write(tmp_path, "v.json", {"1": 1})
    assert runner.invoke(main, ["norm", "--space", "Wk", "--vec", vec]).exit_code == 2
    assert runner.invoke(main, ["norm", "--params", "nosuch", "--vec", vec]).exit_code == 2
    res = runner.invoke(main, ["run", "--suite", "nosuch"])
    assert res.exit_code == 2 and "unknown suite" in res.output


def test_kset_verify_exit_codes(runner, tmp_path):
    good = write(tmp_path, "g.json", tree_to_json(Avg(2, 4, (Leaf(1), Leaf(2)))))
    bad = write(tmp_path, "b.json", tree_to_json(Avg(2, 4, tuple(Leaf(c) for c in range(1, 10)))))
    assert runner.invoke(main, ["kset", "verify", "--tree", good]).exit_code == 0
    res = runner.invoke(main, ["kset", "verify", "--tree", bad])
    assert res.exit_code == 1
    assert "arity exceeds n_2" in res.output


def test_kset_enum(runner):
    res = runner.invoke(main, ["kset", "enum", "--window", "1:3", "--depth", "0"])
    assert res.exit_code == 0 and json.loads(res.output)["count"] == 6
    assert runner.invoke(main, ["kset", "enum", "--window", "three"]).exit_code == 2


def test_uncond_flip_command(runner, tmp_path):
    tree = write(tmp_path, "f.json", tree_to_json(Avg(2, 4, (Leaf(1), Leaf(2)))))
    blocks = write(tmp_path, "x.json", [{"1": 1}, {"2": 1}])
    res = runner.invoke(main, ["uncond", "flip", "--tree", tree, "--blocks", blocks, "--signs", "+-"])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["status"] == "pass"
    res = runner.invoke(main, ["uncond", "flip", "--tree", tree, "--blocks", blocks, "--signs", "+"])
    assert res.exit_code == 2


def test_seq_probe_identity(runner):
    res = runner.invoke(main, ["seq", "probe", "--operator", "identity", "--window", "1:40"])
    assert res.exit_code == 0, res.output


def test_run_and_emit(runner, tmp_path):
    out = tmp_path / "r.json"
    res = runner.invoke(main, ["run", "--suite", "basic-inequality", "--budget", "6", "--seed", "2",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["emit", "--report", str(out), "--format", "csv"])
    assert res.exit_code == 0 and res.output.startswith("claim,anchor,status")


def test_fixed_seed_is_deterministic():
    cfg = RunConfig(seed=3, budget=8)
    assert run_suite(cfg, "uncond-transform").dumps() == run_suite(cfg, "uncond-transform").dumps()
