"""
Evaluation report formatters.

Provides Rich, AI, and Markdown formatters for EvalReport data.
"""

from typing import Any

from .base import (
    AIFormatter,
    MarkdownFormatter,
    RichFormatter,
    Table,
    box,
    fmt_float,
    register_formatter,
    render_to_string,
)

__all__ = ["ReportRichFormatter", "ReportAIFormatter", "ReportMarkdownFormatter"]

ROWS = [
    ("distance", "d(θ̂, θ*)"),
    ("misclustering_mass", "Misclustered mass"),
    ("chi2", "χ²(n)"),
    ("rho", "ρ = min N_j/N"),
    ("nu_uniform_term", "ν uniform term"),
    ("pe_sum_term", "Σ n_i p_e(n_i) / N"),
]


def _is_report_data(data: Any) -> bool:
    return isinstance(data, dict) and isinstance(data.get("reports"), list)


@register_formatter("mixfed", "report", "rich")
class ReportRichFormatter(RichFormatter):
    """One column per seed."""

    def format(self, data: Any) -> str:
        if not _is_report_data(data):
            return super().format(data)
        reports = data["reports"]
        table = Table(
            title="Evaluation",
            box=box.ROUNDED,
            header_style="bold",
            border_style="dim",
            title_style="bold",
        )
        table.add_column("Metric", no_wrap=True)
        for r in reports:
            table.add_column(f"seed {r['seed']}", justify="right")
        for key, label in ROWS:
            table.add_row(label, *(fmt_float(r.get(key)) for r in reports))
        table.add_row("Permutation", *(str(r.get("best_permutation")) for r in reports))
        return render_to_string(table)


@register_formatter("mixfed", "report", "ai")
class ReportAIFormatter(AIFormatter):

    def format(self, data: Any) -> str:
        if not _is_report_data(data):
            return super().format(data)
        lines = [f"REPORTS: {len(data['reports'])}"]
        for r in data["reports"]:
            fields = " ".join(f"{key}={fmt_float(r.get(key), 6)}" for key, _ in ROWS)
            lines.append(f"seed={r['seed']} {fields} perm={r.get('best_permutation')}")
        return "\n".join(lines)


@register_formatter("mixfed", "report", "markdown")
class ReportMarkdownFormatter(MarkdownFormatter):

    def format(self, data: Any) -> str:
        if not _is_report_data(data):
            return super().format(data)
        reports = data["reports"]
        lines = [
            "## Evaluation",
            "",
            "| Metric | " + " | ".join(f"seed {r['seed']}" for r in reports) + " |",
            "|--------|" + "|".join("------:" for _ in reports) + "|",
        ]
        for key, label in ROWS:
            lines.append(f"| {label} | " + " | ".join(fmt_float(r.get(key)) for r in reports) + " |")
        return "\n".join(lines)
