"""
Run summary formatters.

Provides Rich, AI, and Markdown formatters for per-seed run summaries.
"""

from typing import Any

from .base import (
    AIFormatter,
    MarkdownFormatter,
    RichFormatter,
    Table,
    Text,
    box,
    fmt_bytes,
    fmt_float,
    register_formatter,
    render_to_string,
    status_style,
)

__all__ = ["SummaryRichFormatter", "SummaryAIFormatter", "SummaryMarkdownFormatter"]


def _is_summary_data(data: Any) -> bool:
    return isinstance(data, dict) and isinstance(data.get("seeds"), list)


def _outcome(summary: dict) -> str:
    failure = summary.get("failure")
    if failure:
        return f"{failure.get('phase', '?')}: {failure.get('code', '?')}"
    return "ok"


@register_formatter("mixfed", "summary", "rich")
class SummaryRichFormatter(RichFormatter):
    """Rich terminal run summaries with tables."""

    def format(self, data: Any) -> str:
        if not _is_summary_data(data):
            return super().format(data)
        seeds = data["seeds"]
        if not seeds:
            return render_to_string(Text("No seeds run", style="yellow"))

        ok = sum(1 for s in seeds if s.get("status") == "ok")
        table = Table(
            title=f"Runs ({ok}/{len(seeds)} ok)",
            box=box.ROUNDED,
            header_style="bold",
            border_style="dim",
            title_style="bold",
        )
        table.add_column("", width=3, justify="center", no_wrap=True)
        table.add_column("Seed", no_wrap=True)
        table.add_column("Phase 1 d", justify="right")
        table.add_column("Final d/Δ", justify="right")
        table.add_column("Miscl.", justify="right")
        table.add_column("Bytes", justify="right")
        table.add_column("Outcome")

        for s in seeds:
            icon, style = status_style(s.get("status", ""))
            report = s.get("report", {})
            table.add_row(
                Text(icon, style=style),
                str(s.get("seed")),
                fmt_float((s.get("phase1") or {}).get("distance")),
                fmt_float(s.get("distance_over_delta")),
                fmt_float(report.get("misclustering_mass")),
                fmt_bytes(s.get("bytes_total")),
                Text(_outcome(s), style=style),
            )
        return render_to_string(table)


@register_formatter("mixfed", "summary", "ai")
class SummaryAIFormatter(AIFormatter):
    """AI-optimized run summaries."""

    def format(self, data: Any) -> str:
        if not _is_summary_data(data):
            return super().format(data)
        seeds = data["seeds"]
        lines = [f"RUNS: {len(seeds)} ok={sum(1 for s in seeds if s.get('status') == 'ok')}"]
        for s in seeds:
            parts = [f"seed={s.get('seed')}", f"status={s.get('status')}"]
            if "distance_over_delta" in s:
                parts.append(f"final_d_over_delta={fmt_float(s['distance_over_delta'], 6)}")
            if "report" in s:
                parts.append(f"misclustering={fmt_float(s['report'].get('misclustering_mass'), 6)}")
            parts.append(f"bytes={s.get('bytes_total', 0)}")
            if s.get("failure"):
                parts.append(f"failure={_outcome(s)}")
            lines.append(" ".join(parts))
        return "\n".join(lines)


@register_formatter("mixfed", "summary", "markdown")
class SummaryMarkdownFormatter(MarkdownFormatter):
    """Markdown run summaries."""

    def format(self, data: Any) -> str:
        if not _is_summary_data(data):
            return super().format(data)
        lines = [
            "## Runs",
            "",
            "| Seed | Status | Final d/Δ | Misclustered | Bytes |",
            "|------|--------|----------:|-------------:|------:|",
        ]
        for s in data["seeds"]:
            lines.append(
                f"| {s.get('seed')} | {_outcome(s)} | {fmt_float(s.get('distance_over_delta'))} "
                f"| {fmt_float(s.get('report', {}).get('misclustering_mass'))} | {fmt_bytes(s.get('bytes_total'))} |"
            )
        return "\n".join(lines)
