"""Tests for reporting.py: aggregation, binomial helpers and report emission."""

from __future__ import annotations

import json

import numpy as np
import pytest

from covtail.errors import CovtailError
from covtail.reporting import (
    CheckReport,
    TrialReport,
    TrialRow,
    binomial_se,
    emit,
    frequency_passes,
    jsonable,
    wilson_interval,
)


def _rows(flags: list[bool]) -> list[TrialRow]:
    return [TrialRow(i, float(i), 1.5, v) for i, v in enumerate(flags)]


# ======================================================================
# Binomial helpers
# ======================================================================
class TestBinomial:
    def test_wilson_edges(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)
        low, high = wilson_interval(0, 100)
        assert low == pytest.approx(0.0, abs=1e-12)
        assert 0.0 < high < 0.05
        low, high = wilson_interval(100, 100)
        assert high == pytest.approx(1.0, abs=1e-12)
        assert low > 0.95

    def test_wilson_contains_frequency(self):
        low, high = wilson_interval(30, 100)
        assert low < 0.3 < high

    def test_binomial_se(self):
        assert binomial_se(0.5, 100) == pytest.approx(0.05)
        assert binomial_se(1.5, 100) == 0.0

    def test_frequency_passes(self):
        assert frequency_passes(0.1, 0.1, 100)
        assert frequency_passes(0.18, 0.1, 100)
        assert not frequency_passes(0.2, 0.1, 100)
        assert frequency_passes(1.0, 1.0, 10)

    def test_jsonable(self):
        value = jsonable({"a": np.float64(1.5), "b": np.arange(2), "c": (np.bool_(True), np.int64(3))})
        assert value == {"a": 1.5, "b": [0, 1], "c": [True, 3]}
        json.dumps(value)


# ======================================================================
# Aggregation
# ======================================================================
class TestTrialReport:
    def test_counts(self):
        report = TrialReport.from_rows("x", {}, _rows([False, True, False, False]), target_probability=0.5)
        assert report.trials == 4
        assert report.violations == 1
        assert report.frequency == 0.25
        assert report.passed is True

    def test_vacuous_has_no_verdict(self):
        report = TrialReport.from_rows("x", {}, _rows([True, True]), target_probability=0.1, vacuous=True)
        assert report.passed is None

    def test_without_target_any_violation_fails(self):
        assert TrialReport.from_rows("x", {}, _rows([False, False]), target_probability=None).passed is True
        assert TrialReport.from_rows("x", {}, _rows([False, True]), target_probability=None).passed is False

    def test_from_checks(self):
        checks = [
            CheckReport("a", 1.0, 2.0, 0.1, True, {"k": np.float64(3.0)}),
            CheckReport("b", 3.0, 2.0, 0.1, False),
        ]
        report = TrialReport.from_checks("suite", {}, checks)
        assert report.violations == 1
        assert report.passed is False
        assert report.rows[0].extras == {"name": "a", "standard_error": 0.1, "k": 3.0}

    def test_dict_uses_pass_key(self):
        report = TrialReport.from_rows("x", {"n": np.int64(5)}, _rows([False]), target_probability=None)
        data = report.to_dict()
        assert data["pass"] is True
        assert "passed" not in data
        assert data["params"] == {"n": 5}
        restored = TrialReport.from_dict(json.loads(report.to_json()))
        assert restored.passed is True
        assert restored.rows[0].statistic == 0.0


# ======================================================================
# Emission
# ======================================================================
class TestEmit:
    def test_csv_rows(self, tmp_path):
        report = TrialReport.from_rows("x", {}, _rows([False, True, False]), target_probability=None)
        (path,) = emit(report, "csv", tmp_path / "out")
        lines = path.read_text().splitlines()
        assert path.name == "out.csv"
        assert lines[0] == "trial,statistic,bound,violated"
        assert lines[2] == "1,1.0,1.5,1"
        assert len(lines) == 4

    def test_empty_report_has_header_only(self, tmp_path):
        report = TrialReport.from_rows("x", {}, [], target_probability=None)
        (path,) = emit(report, "csv", tmp_path / "empty.csv")
        assert path.read_text().splitlines() == ["trial,statistic,bound,violated"]

    def test_both_formats(self, tmp_path):
        report = TrialReport.from_rows("x", {}, _rows([False]), target_probability=None)
        paths = emit(report, "both", tmp_path / "nested" / "run.json")
        assert sorted(p.name for p in paths) == ["run.csv", "run.json"]
        assert json.loads((tmp_path / "nested" / "run.json").read_text())["experiment"] == "x"

    def test_unknown_format(self, tmp_path):
        report = TrialReport.from_rows("x", {}, [], target_probability=None)
        with pytest.raises(CovtailError):
            emit(report, "xml", tmp_path / "r")
