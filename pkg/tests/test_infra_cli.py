# tests/test_infra_cli.py
import json

import pytest

from fracbec.domain.models import Check
from fracbec.infrastructure.cli.command_line_interface import build_parser, main


@pytest.fixture
def config_path(config_data, write_config):
    return write_config(config_data)


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestParser:

    def test_subcommands_are_registered(self):
        parser = build_parser()
        for command in ("ground-state", "eig", "minimize", "sweep", "verify"):
            args = parser.parse_args([command, "run.json"])
            assert args.command == command
            assert callable(args.func)
        assert parser.parse_args(["schema"]).command == "schema"

    def test_flags(self):
        parser = build_parser()
        args = parser.parse_args(["-q", "ground-state", "run.json", "--moment", "0.5", "--moment", "1", "--output-dir", "o"])
        assert args.quiet and not args.verbose
        assert args.moment == [0.5, 1.0]
        assert args.output_dir == "o"
        assert parser.parse_args(["verify", "run.json", "--full"]).full
        assert parser.parse_args(["sweep", "run.json", "--symmetry-probe"]).symmetry_probe
        assert parser.parse_args(["minimize", "run.json", "--probe"]).probe

    def test_verbose_and_quiet_are_exclusive(self, capsys):
        with pytest.raises(SystemExit) as e:
            build_parser().parse_args(["-v", "-q", "schema"])
        assert e.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["--version"])
        assert e.value.code == 0
        assert capsys.readouterr().out.startswith("fracbec ")

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 1
        assert "usage: fracbec" in capsys.readouterr().err


class TestExitCodes:

    def test_ground_state_succeeds(self, config_path, tmp_path):
        out = tmp_path / "out"
        assert run_cli("-q", "ground-state", config_path, "--output-dir", out, "--moment", "0.5") == 0
        ledger = json.loads((out / "ground_state.json").read_text())
        assert "0.5" in ledger["moments"]
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["command"] == "ground-state"
        assert manifest["files"] == ["ground_state.csv", "ground_state.json"]
        assert manifest["config_hash"] == ledger["config_hash"]

    def test_results_are_byte_identical_across_runs(self, config_path, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        assert run_cli("-q", "ground-state", config_path, "--output-dir", first) == 0
        assert run_cli("-q", "ground-state", config_path, "--output-dir", second) == 0
        assert (first / "ground_state.csv").read_bytes() == (second / "ground_state.csv").read_bytes()
        assert (first / "ground_state.json").read_bytes() == (second / "ground_state.json").read_bytes()

    def test_config_error_exits_with_two(self, config_data, write_config, tmp_path, capsys):
        config_data["grid"]["n_points"] = 1000
        code = run_cli("eig", write_config(config_data), "--output-dir", tmp_path / "out")
        assert code == 2
        err = capsys.readouterr().err
        assert "ConfigError" in err
        assert "grid/n_points" in err
        assert not (tmp_path / "out").exists()

    def test_missing_params_exits_with_two(self, config_path, tmp_path, capsys):
        assert run_cli("-q", "minimize", config_path, "--output-dir", tmp_path / "out") == 2
        assert "params" in capsys.readouterr().err

    def test_non_convergence_exits_with_three(self, config_data, write_config, tmp_path, capsys):
        config_data["ground_state"]["max_iter"] = 1
        out = tmp_path / "out"
        assert run_cli("-q", "ground-state", write_config(config_data), "--output-dir", out) == 3
        assert "NonConvergenceError" in capsys.readouterr().err
        assert json.loads((out / "run_manifest.json").read_text())["files"] == []

    def test_negative_moment_exits_with_one(self, config_path, tmp_path, capsys):
        assert run_cli("-q", "ground-state", config_path, "--output-dir", tmp_path / "out", "--moment", "-1") == 1
        err = capsys.readouterr().err
        assert "DivergentMomentError" in err
        assert "Traceback" not in err

    def test_failed_check_exits_with_four(self, config_path, tmp_path, mocker, capsys):
        suite = mocker.patch("fracbec.application.services.InvariantSuite").return_value
        suite.ground = None
        suite.run.return_value = [Check("GN quotient at Q", False, 0.5, 1e-5, "forced")]
        out = tmp_path / "out"
        assert run_cli("-q", "verify", config_path, "--output-dir", out) == 4
        captured = capsys.readouterr()
        assert "GN quotient at Q" in captured.out
        assert "VerificationError" in captured.err
        assert json.loads((out / "verify.json").read_text())["passed"] is False
        assert "## Failed checks" in (out / "verify_report.md").read_text()

    def test_passing_verify_exits_with_zero(self, config_path, tmp_path, mocker):
        suite = mocker.patch("fracbec.application.services.InvariantSuite").return_value
        suite.ground = None
        suite.run.return_value = [Check("GN quotient at Q", True, 1e-7, 1e-5)]
        assert run_cli("-q", "verify", config_path, "--output-dir", tmp_path / "out", "--full") == 0
        suite.run.assert_called_once_with(True)

    def test_env_output_dir(self, config_path, tmp_path, monkeypatch):
        monkeypatch.setenv("FRACBEC_OUTPUT_DIR", str(tmp_path / "env-out"))
        assert run_cli("-q", "eig", config_path) == 0
        assert (tmp_path / "env-out" / "eig.json").is_file()

    def test_schema_plain(self, capsys):
        assert run_cli("-q", "schema", "--plain") == 0
        schema = json.loads(capsys.readouterr().out)
        assert schema["required"] == ["potentials"]
