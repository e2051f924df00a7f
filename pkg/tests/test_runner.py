import csv

from fgcalc.cli import RunConfig
from fgcalc.runner import RunOutput, run

SINPI = {
    "subcommand": "expand",
    "function": "sinpi",
    "pair": "one-diff",
    "nodes": "affine:u=0,h=1",
    "params": "constant:c=0",
    "max_order": 10,
    "probe": 0.5,
}


def test_expand_writes_json_and_csv(tmp_path):
    json_path, csv_path = tmp_path / "expand.json", tmp_path / "expand.csv"
    config = RunConfig(subcommand="expand", max_order=20, json_path=str(json_path), csv_path=str(csv_path))
    assert run(config) == 0
    output = RunOutput.model_validate_json(json_path.read_text())
    assert output.command == "expand"
    assert output.report.type == "expansion"
    with open(csv_path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 21
    assert list(rows[0]) == ["n", "re_G", "im_G", "abs_lambda", "probe_error", "interpolation_residual"]


def test_failed_expansion_exits_one(tmp_path):
    path = tmp_path / "sinpi.json"
    assert run(RunConfig(**SINPI, json_path=str(path))) == 1
    output = RunOutput.model_validate_json(path.read_text())
    assert output.exit_code == 1
    assert "accumulation" in output.report.diagnostic.diagnosis


def test_domain_error_exits_three(tmp_path):
    config = RunConfig(
        subcommand="corpus", cases=["q-binomial"], overrides={"q": 1.5}, json_path=str(tmp_path / "c.json")
    )
    assert run(config) == 3
    assert not (tmp_path / "c.json").exists()


def test_zero_denominator_exits_three(tmp_path):
    config = RunConfig(
        subcommand="diff", nodes="list:2;3", params="constant:c=0.5", order=0, json_path=str(tmp_path / "d.json")
    )
    assert run(config) == 3


def test_usage_error_exits_two(tmp_path):
    config = RunConfig(subcommand="corpus", overrides={"q": 0.3}, json_path=str(tmp_path / "c.json"))
    assert run(config) == 2


def test_corpus_subset_csv(tmp_path):
    path = tmp_path / "corpus.csv"
    config = RunConfig(subcommand="corpus", cases=["geometric-finite", "singh"], csv_path=str(path))
    assert run(config) == 0
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert [row["id"] for row in rows] == ["geometric-finite", "singh"]
    assert rows[1]["status"] == "stub"


def test_runs_are_deterministic(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    config = dict(subcommand="kernel-check", pair="bibasic:a=0.2,b=0.1", samples=50, seed=4)
    assert run(RunConfig(**config, json_path=str(first))) == 0
    assert run(RunConfig(**config, json_path=str(second))) == 0
    assert first.read_text() == second.read_text()
