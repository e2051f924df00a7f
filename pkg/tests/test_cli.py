import pytest
from click.testing import CliRunner

from fgcalc.cli import DEFAULT_NODES, cli, parse_args
from fgcalc.errors import UsageError
from fgcalc.qcore import qpoch
from fgcalc.runner import RunOutput


@pytest.fixture
def runner():
    return CliRunner()


def test_parse_diff_defaults():
    config = parse_args(["diff"])
    assert config.subcommand == "diff"
    assert config.pair == "onexy-diff"
    assert config.nodes == DEFAULT_NODES
    assert config.order == 6
    assert config.method == "direct"


def test_parse_expand_options():
    config = parse_args(
        ["expand", "--function", "sinpi", "--nodes", "affine:u=0,h=1", "--max-order", "10", "--probe", "0.5+0.1i"]
    )
    assert config.function == "sinpi"
    assert config.max_order == 10
    assert config.probe == 0.5 + 0.1j


def test_parse_corpus_options():
    config = parse_args(["corpus", "--case", "q-gauss", "--param", "q=0.3", "--sweep", "4", "--seed", "9"])
    assert config.cases == ["q-gauss"]
    assert config.overrides == {"q": 0.3}
    assert config.trials == 4
    assert config.seed == 9


def test_parse_kernel_check_defaults_to_every_pair():
    config = parse_args(["kernel-check", "--json", "out/kernel.json"])
    assert config.subcommand == "kernel-check"
    assert config.pair is None
    assert config.json_path == "out/kernel.json"


@pytest.mark.parametrize(
    "argv",
    [
        ["diff", "--pair", "three-diff"],
        ["diff", "--nodes", "spiral:r=2"],
        ["diff", "--order", "-1"],
        ["expand", "--function", "tangent"],
        ["corpus", "--case", "q-nothing"],
        ["invert", "--size", "0"],
        [],
    ],
)
def test_parse_rejects_bad_arguments(argv):
    with pytest.raises(UsageError):
        parse_args(argv)


def test_unknown_pair_exits_with_usage_status(runner):
    result = runner.invoke(cli, ["diff", "--pair", "three-diff"])
    assert result.exit_code == 2
    assert "Valid pairs" in result.output


def test_invert_with_verification(runner, tmp_path):
    path = tmp_path / "invert.json"
    result = runner.invoke(
        cli, ["invert", "--pair", "bibasic:a=0.2,b=0.1", "--size", "12", "--verify", "--json", str(path)]
    )
    assert result.exit_code == 0
    output = RunOutput.model_validate_json(path.read_text())
    assert output.report.verification.max_deviation <= 1e-9
    assert len(output.report.B) == 12


def test_diff_matches_closed_form(runner, tmp_path):
    path = tmp_path / "diff.json"
    result = runner.invoke(
        cli,
        [
            "diff",
            "--pair",
            "onexy-diff",
            "--nodes",
            "geometric:b=1,r=0.5",
            "--params",
            "geometric:u=0.3,r=0.4",
            "--order",
            "6",
            "--function",
            "inv1mcx:c=0.3",
            "--json",
            str(path),
        ],
    )
    assert result.exit_code == 0
    output = RunOutput.model_validate_json(path.read_text())
    expected = complex(0.3**6 * qpoch(0.4, 0.4, 5) / qpoch(0.3, 0.5, 7))
    assert abs(output.report.value - expected) <= 1e-10 * abs(expected)
    assert output.report.condition >= 1


def test_broken_pair_fails_kernel_check(runner, tmp_path):
    argv = ["kernel-check", "--pair", "broken", "--samples", "50", "--json", str(tmp_path / "k.json")]
    result = runner.invoke(cli, argv)
    assert result.exit_code == 1


def test_command_hands_config_to_runner(runner, mocker):
    mock_run = mocker.patch("fgcalc.runner.run", return_value=3)
    result = runner.invoke(cli, ["corpus", "--case", "q-gauss", "--param", "q=0.3"])
    assert result.exit_code == 3
    config = mock_run.call_args.args[0]
    assert config.subcommand == "corpus"
    assert config.cases == ["q-gauss"]
    assert config.overrides == {"q": 0.3}
