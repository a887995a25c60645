"""
Tests for mixfed output formatters.
"""

import pytest

from mixfed.formatters import formatter_registry
from mixfed.formatters.base import FormatterRegistry, JsonFormatter, fmt_bytes, fmt_float, status_style
from mixfed.formatters.instance import InstanceAIFormatter, InstanceMarkdownFormatter, InstanceRichFormatter
from mixfed.formatters.phase1 import Phase1AIFormatter, Phase1MarkdownFormatter, Phase1RichFormatter
from mixfed.formatters.report import ReportAIFormatter, ReportMarkdownFormatter, ReportRichFormatter
from mixfed.formatters.summary import SummaryAIFormatter, SummaryMarkdownFormatter, SummaryRichFormatter


@pytest.fixture
def summary_data():
    return {"seeds": [
        {
            "seed": 11,
            "status": "ok",
            "delta": 4.0,
            "phase1": {"succeeded": True, "anchors": [1, 2], "distance": 0.3, "bytes": 2048},
            "report": {"misclustering_mass": 0.25},
            "distance_over_delta": 0.01,
            "bytes_total": 4096,
        },
        {
            "seed": 12,
            "status": "failed",
            "delta": 4.0,
            "failure": {"code": "clustering", "phase": "phase1", "message": "1 component"},
            "bytes_total": 100,
        },
    ]}


@pytest.fixture
def report_data():
    return {"reports": [{
        "seed": 3,
        "distance": 0.125,
        "best_permutation": [1, 0],
        "misclustering_mass": 0.0,
        "chi2": 0.25,
        "per_cluster_mass": [0.5, 0.5],
        "rho": 0.5,
        "nu_uniform_term": 0.3,
        "pe_sum_term": 1.0,
    }]}


@pytest.fixture
def phase1_data():
    return {"seeds": [
        {"seed": 1, "succeeded": True, "anchors": [0, 4, 9], "centers": [[2.0, 0.0], [-2.0, 0.0]], "bytes": 512},
        {
            "seed": 2,
            "succeeded": False,
            "anchors": [1],
            "centers": None,
            "bytes": 64,
            "failure": {"code": "clustering", "message": "found 1 component"},
        },
    ]}


@pytest.fixture
def instance_data():
    return {"seeds": [{"seed": 5, "k": 2, "d": 3, "M": 20, "N": 80, "delta": 1.5, "p_min": 0.4, "directory": "runs/seed_5"}]}


# ═══════════════════════════════════════════════════════════════════════════════
# Helpers and registry
# ═══════════════════════════════════════════════════════════════════════════════


class TestHelpers:

    def test_fmt_float(self):
        assert fmt_float(None) == "-"
        assert fmt_float(0.123456) == "0.1235"

    def test_fmt_bytes(self):
        assert fmt_bytes(None) == "-"
        assert fmt_bytes(512) == "512 B"
        assert fmt_bytes(2048) == "2.0 KiB"
        assert fmt_bytes(3 * 1024**2) == "3.0 MiB"

    def test_status_style(self):
        assert status_style("ok") == ("✓", "green")
        assert status_style("failed") == ("✗", "red")
        assert status_style("other")[0] == "•"


class TestRegistry:

    def test_every_type_has_every_format(self):
        keys = formatter_registry.keys()
        for data_type in ("instance", "phase1", "report", "summary"):
            for fmt in ("rich", "ai", "markdown"):
                assert f"mixfed:{data_type}:{fmt}" in keys

    def test_exact_match_only_with_data_type(self):
        assert formatter_registry.get("rich", plugin="mixfed", data_type="nonexistent") is None
        assert isinstance(formatter_registry.get("ai", plugin="mixfed", data_type="report"), ReportAIFormatter)

    def test_fresh_registry_is_empty(self):
        assert FormatterRegistry().get("rich", plugin="mixfed") is None

    def test_json_formatter(self):
        assert JsonFormatter().format({"a": 1}) == '{\n  "a": 1\n}'


# ═══════════════════════════════════════════════════════════════════════════════
# Run summaries
# ═══════════════════════════════════════════════════════════════════════════════


class TestSummaryFormatters:

    def test_rich(self, summary_data):
        result = SummaryRichFormatter().format(summary_data)
        assert "Runs (1/2 ok)" in result
        assert "clustering" in result
        assert "4.0 KiB" in result

    def test_rich_empty(self):
        assert "No seeds run" in SummaryRichFormatter().format({"seeds": []})

    def test_ai(self, summary_data):
        lines = SummaryAIFormatter().format(summary_data).splitlines()
        assert lines[0] == "RUNS: 2 ok=1"
        assert lines[1] == "seed=11 status=ok final_d_over_delta=0.01 misclustering=0.25 bytes=4096"
        assert lines[2] == "seed=12 status=failed bytes=100 failure=phase1: clustering"

    def test_markdown(self, summary_data):
        result = SummaryMarkdownFormatter().format(summary_data)
        assert result.startswith("## Runs")
        assert "| 11 | ok | 0.01 | 0.25 | 4.0 KiB |" in result
        assert "| 12 | phase1: clustering | - | - | 100 B |" in result

    def test_other_data_falls_back(self):
        assert SummaryAIFormatter().format({"x": 1}) == '{"x":1}'


# ═══════════════════════════════════════════════════════════════════════════════
# Evaluation reports
# ═══════════════════════════════════════════════════════════════════════════════


class TestReportFormatters:

    def test_rich(self, report_data):
        result = ReportRichFormatter().format(report_data)
        assert "Evaluation" in result
        assert "seed 3" in result
        assert "0.125" in result

    def test_ai(self, report_data):
        lines = ReportAIFormatter().format(report_data).splitlines()
        assert lines[0] == "REPORTS: 1"
        assert lines[1].startswith("seed=3 distance=0.125 misclustering_mass=0 chi2=0.25")
        assert lines[1].endswith("perm=[1, 0]")

    def test_markdown(self, report_data):
        result = ReportMarkdownFormatter().format(report_data)
        assert "## Evaluation" in result
        assert "| Metric | seed 3 |" in result
        assert "| χ²(n) | 0.25 |" in result


# ═══════════════════════════════════════════════════════════════════════════════
# Phase 1 and instances
# ═══════════════════════════════════════════════════════════════════════════════


class TestPhase1Formatters:

    def test_rich(self, phase1_data):
        result = Phase1RichFormatter().format(phase1_data)
        assert "Clustered" in result
        assert "Clustering failed" in result
        assert "found 1 component" in result

    def test_ai(self, phase1_data):
        lines = Phase1AIFormatter().format(phase1_data).splitlines()
        assert lines[0] == "PHASE1 seed=1 succeeded=true anchors=3 bytes=512"
        assert lines[1] == "centers: (2, 0); (-2, 0)"
        assert lines[2] == "PHASE1 seed=2 succeeded=false anchors=1 bytes=64"
        assert lines[3] == "centers: none"
        assert lines[4] == "failure: clustering found 1 component"

    def test_markdown(self, phase1_data):
        result = Phase1MarkdownFormatter().format(phase1_data)
        assert "| 1 | ✅ | 3 | 512 B |" in result
        assert "| 2 | ❌ | 1 | 64 B |" in result


class TestInstanceFormatters:

    def test_rich(self, instance_data):
        result = InstanceRichFormatter().format(instance_data)
        assert "Instances" in result
        assert "80" in result

    def test_ai(self, instance_data):
        assert InstanceAIFormatter().format(instance_data) == (
            "INSTANCE seed=5 k=2 d=3 M=20 N=80 delta=1.5 dir=runs/seed_5"
        )

    def test_markdown(self, instance_data):
        assert "| 5 | 2 | 3 | 20 | 80 | 1.5 |" in InstanceMarkdownFormatter().format(instance_data)
