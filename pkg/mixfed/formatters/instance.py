"""Generated-instance formatters."""

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

__all__ = ["InstanceRichFormatter", "InstanceAIFormatter", "InstanceMarkdownFormatter"]

COLUMNS = ("k", "d", "M", "N")


def _is_instance_data(data: Any) -> bool:
    return isinstance(data, dict) and isinstance(data.get("seeds"), list)


@register_formatter("mixfed", "instance", "rich")
class InstanceRichFormatter(RichFormatter):

    def format(self, data: Any) -> str:
        if not _is_instance_data(data):
            return super().format(data)
        table = Table(title="Instances", box=box.ROUNDED, header_style="bold", border_style="dim", title_style="bold")
        table.add_column("Seed", no_wrap=True)
        for col in COLUMNS:
            table.add_column(col, justify="right")
        table.add_column("Δ", justify="right")
        table.add_column("p_min", justify="right")
        table.add_column("Directory")
        for s in data["seeds"]:
            table.add_row(
                str(s.get("seed")),
                *(str(s.get(col, "?")) for col in COLUMNS),
                fmt_float(s.get("delta")),
                fmt_float(s.get("p_min")),
                str(s.get("directory", "")),
            )
        return render_to_string(table)


@register_formatter("mixfed", "instance", "ai")
class InstanceAIFormatter(AIFormatter):

    def format(self, data: Any) -> str:
        if not _is_instance_data(data):
            return super().format(data)
        return "\n".join(
            f"INSTANCE seed={s.get('seed')} "
            + " ".join(f"{col}={s.get(col)}" for col in COLUMNS)
            + f" delta={fmt_float(s.get('delta'), 6)} dir={s.get('directory')}"
            for s in data["seeds"]
        )


@register_formatter("mixfed", "instance", "markdown")
class InstanceMarkdownFormatter(MarkdownFormatter):

    def format(self, data: Any) -> str:
        if not _is_instance_data(data):
            return super().format(data)
        lines = ["## Instances", "", "| Seed | k | d | M | N | Δ |", "|------|---|---|---|---|---|"]
        for s in data["seeds"]:
            lines.append(
                f"| {s.get('seed')} | " + " | ".join(str(s.get(col)) for col in COLUMNS)
                + f" | {fmt_float(s.get('delta'))} |"
            )
        return "\n".join(lines)
