"""Phase 1 (anchor descent) formatters."""

from typing import Any

from .base import (
    AIFormatter,
    MarkdownFormatter,
    Panel,
    RichFormatter,
    Text,
    box,
    fmt_bytes,
    fmt_float,
    register_formatter,
    render_to_string,
)

__all__ = ["Phase1RichFormatter", "Phase1AIFormatter", "Phase1MarkdownFormatter"]


def _is_phase1_data(data: Any) -> bool:
    return isinstance(data, dict) and isinstance(data.get("seeds"), list)


def _centers(centers: list | None) -> str:
    if centers is None:
        return "none"
    return "; ".join("(" + ", ".join(fmt_float(v, 3) for v in c) + ")" for c in centers)


@register_formatter("mixfed", "phase1", "rich")
class Phase1RichFormatter(RichFormatter):

    def format(self, data: Any) -> str:
        if not _is_phase1_data(data):
            return super().format(data)
        panels = []
        for s in data["seeds"]:
            ok = s.get("succeeded", False)
            body = Text()
            body.append("● Clustered\n" if ok else "○ Clustering failed\n", style="green bold" if ok else "red bold")
            body.append(f"Anchors: {len(s.get('anchors', []))}\n")
            body.append(f"Centers: {_centers(s.get('centers'))}\n")
            body.append(f"Traffic: {fmt_bytes(s.get('bytes'))}")
            if s.get("failure"):
                body.append(f"\n{s['failure'].get('message', '')}", style="red")
            panels.append(render_to_string(Panel(
                body,
                title=f"Phase 1 · seed {s.get('seed')}",
                title_align="left",
                box=box.ROUNDED,
                border_style="green" if ok else "red",
            )))
        return "\n".join(panels)


@register_formatter("mixfed", "phase1", "ai")
class Phase1AIFormatter(AIFormatter):

    def format(self, data: Any) -> str:
        if not _is_phase1_data(data):
            return super().format(data)
        lines = []
        for s in data["seeds"]:
            lines.append(
                f"PHASE1 seed={s.get('seed')} succeeded={str(s.get('succeeded', False)).lower()} "
                f"anchors={len(s.get('anchors', []))} bytes={s.get('bytes', 0)}"
            )
            lines.append(f"centers: {_centers(s.get('centers'))}")
            if s.get("failure"):
                lines.append(f"failure: {s['failure'].get('code')} {s['failure'].get('message')}")
        return "\n".join(lines)


@register_formatter("mixfed", "phase1", "markdown")
class Phase1MarkdownFormatter(MarkdownFormatter):

    def format(self, data: Any) -> str:
        if not _is_phase1_data(data):
            return super().format(data)
        lines = ["## Phase 1", "", "| Seed | Clustered | Anchors | Traffic |", "|------|-----------|--------:|--------:|"]
        for s in data["seeds"]:
            emoji = "✅" if s.get("succeeded") else "❌"
            lines.append(
                f"| {s.get('seed')} | {emoji} | {len(s.get('anchors', []))} | {fmt_bytes(s.get('bytes'))} |"
            )
        return "\n".join(lines)
