"""Tests for the command-line interface (cli/main.py)."""

from __future__ import annotations

import json

import pytest

from covtail.cli.main import _exit_code, _parse_support, build_parser, run_cli
from covtail.errors import ConfigError
from covtail.reporting import TrialReport, TrialRow


@pytest.fixture
def config_file(tmp_path, lowertail_config):
    path = tmp_path / "lowertail.json"
    path.write_text(json.dumps(lowertail_config))
    return path


def _report(violated: bool, flags: list[str] | None = None, vacuous: bool = False) -> TrialReport:
    rows = [TrialRow(0, 0.5, 0.6, violated)]
    return TrialReport.from_rows("x", {}, rows, target_probability=None, vacuous=vacuous, flags=flags)


# ======================================================================
# Parser
# ======================================================================
class TestParser:
    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_run_arguments(self):
        args = build_parser().parse_args(
            ["-q", "run", "--config", "c.json", "--set", "trials=5", "--set", "params.n=10", "-f", "both"]
        )
        assert args.quiet
        assert args.overrides == ["trials=5", "params.n=10"]
        assert args.format == "both"

    def test_support_parsing(self):
        assert _parse_support("1, 3,5") == [1, 3, 5]
        with pytest.raises(ConfigError) as info:
            _parse_support("a,b")
        assert info.value.field_path == "--support"


class TestExitCode:
    def test_pass(self):
        assert _exit_code(_report(False)) == 0

    def test_failure(self):
        assert _exit_code(_report(True)) == 1

    def test_calibrated_failure_does_not_gate(self):
        assert _exit_code(_report(True, flags=["calibrated"])) == 0

    def test_vacuous(self):
        assert _exit_code(_report(True, vacuous=True)) == 0


# ======================================================================
# run
# ======================================================================
class TestRunCommand:
    def test_quiet_prints_report_json(self, config_file, capsys):
        assert run_cli(["-q", "run", "--config", str(config_file)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["experiment"] == "lowertail"
        assert report["trials"] == 12
        assert report["vacuous"] is True
        assert report["pass"] is None

    def test_overrides(self, config_file, capsys):
        assert run_cli(["-q", "run", "--config", str(config_file), "--set", "trials=3"]) == 0
        assert json.loads(capsys.readouterr().out)["trials"] == 3

    def test_writes_both_formats(self, config_file, tmp_path, capsys):
        prefix = tmp_path / "out" / "report"
        code = run_cli(["-q", "run", "--config", str(config_file), "--output", str(prefix), "--format", "both"])
        assert code == 0
        assert capsys.readouterr().out == ""
        assert json.loads((tmp_path / "out" / "report.json").read_text())["trials"] == 12
        assert len((tmp_path / "out" / "report.csv").read_text().splitlines()) == 13

    def test_rich_output(self, config_file):
        assert run_cli(["run", "--config", str(config_file)]) == 0

    def test_unknown_experiment(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"experiment": "bogus"}))
        assert run_cli(["-q", "run", "--config", str(path)]) == 2
        assert "experiment" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert run_cli(["-q", "run", "--config", str(tmp_path / "absent.json")]) == 2

    def test_bad_override(self, config_file, capsys):
        assert run_cli(["-q", "run", "--config", str(config_file), "--set", "params.delta=2"]) == 2
        assert "params.delta" in capsys.readouterr().err

    def test_bad_workers(self, config_file):
        assert run_cli(["-q", "run", "--config", str(config_file), "--workers", "lots"]) == 2


# ======================================================================
# re
# ======================================================================
class TestReCommand:
    @pytest.fixture
    def matrix_file(self, tmp_path):
        path = tmp_path / "sigma.csv"
        path.write_text("1,0.6\n0.6,1\n")
        return path

    def test_quiet_json(self, matrix_file, capsys):
        code = run_cli(["-q", "re", "--matrix", str(matrix_file), "--support", "1", "--alpha", "1", "--restarts", "8"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["value"] == pytest.approx(0.8, rel=1e-5)
        assert result["support"] == [1]

    def test_panels(self, matrix_file):
        assert run_cli(["re", "--matrix", str(matrix_file), "--support", "1", "--alpha", "1", "--restarts", "4"]) == 0
        assert run_cli(["re", "--matrix", str(matrix_file), "-s", "2", "-a", "1", "--restarts", "4", "--json"]) == 0

    def test_bad_support(self, matrix_file):
        assert run_cli(["-q", "re", "--matrix", str(matrix_file), "--support", "a,b", "--alpha", "1"]) == 2

    def test_zero_based_support_rejected(self, matrix_file):
        assert run_cli(["-q", "re", "--matrix", str(matrix_file), "--support", "0", "--alpha", "1"]) == 2

    def test_not_psd(self, tmp_path):
        path = tmp_path / "neg.csv"
        path.write_text("1,2\n2,1\n")
        assert run_cli(["-q", "re", "--matrix", str(path), "--support", "1", "--alpha", "1"]) == 2


# ======================================================================
# verify
# ======================================================================
@pytest.mark.slow
def test_verify_suites(tmp_path):
    prefix = tmp_path / "verify"
    code = run_cli(["-q", "verify", "--trials", "20000", "--draws", "200000", "--output", str(prefix)])
    assert code == 0
    assert (tmp_path / "verify_verify_identities.json").exists()
    assert (tmp_path / "verify_concentration.json").exists()
