"""Markdown ablation tables, one marked section per task inside a shared report file."""

from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path

from spectnt.errors import ContractError, FileFormatError
from spectnt.io.tensorfile import atomic_write
from spectnt.reporting.summary import VariantSummary

_MARKER = "<!-- spectnt-ablation:{task}:{edge} -->"


def section_markers(task: str) -> tuple[str, str]:
    return _MARKER.format(task=task, edge="start"), _MARKER.format(task=task, edge="end")


def _cell(value: float | None, percent: bool = False) -> str:
    if value is None:
        return "-"
    return f"{100.0 * value:.2f}" if percent else f"{value:.4g}"


def generate_section(
    summaries: Sequence[VariantSummary], task: str, metrics: Sequence[str]
) -> str:
    """Render the ablation comparison table for ``task`` between its markers."""
    start, end = section_markers(task)
    now = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    header = ["variant", "params", "steps", "final loss", "best step", *(f"{m} (%)" for m in metrics)]
    lines = [
        start,
        f"## Ablation: {task}",
        f"> Generated by spectnt ablate at {now}; do not edit this section manually.",
        "",
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    for s in summaries:
        cells = [
            s.variant,
            f"{s.params:,}",
            str(s.steps),
            _cell(s.final_loss),
            str(s.best_step) if s.best_step is not None else "-",
            *(_cell(s.best.get(m), percent=True) for m in metrics),
        ]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append(end)
    return "\n".join(lines)


def find_section(text: str, task: str) -> tuple[int, int] | None:
    """Character span of ``task``'s section in ``text``, or None when it has none.

    Raises FileFormatError (with the byte offset of the offending marker) for a marker
    without its partner, markers out of order, or a task that appears twice.
    """
    start_marker, end_marker = section_markers(task)
    start, end = text.find(start_marker), text.find(end_marker)
    if start < 0 and end < 0:
        return None

    def offset(index: int) -> int:
        return len(text[:index].encode("utf-8"))

    if start < 0 or end < 0 or end < start:
        where = start if start >= 0 else end
        raise FileFormatError(f"unbalanced {task} ablation markers", offset(where))
    again = text.find(start_marker, start + 1)
    if again >= 0:
        raise FileFormatError(f"{task} ablation section appears twice", offset(again))
    return start, end + len(end_marker)


def update_report(path: Path, task: str, section: str) -> None:
    """Replace ``task``'s section of ``path`` in place, or append it; other sections are kept."""
    start_marker, end_marker = section_markers(task)
    if not (section.startswith(start_marker) and section.endswith(end_marker)):
        raise ContractError(f"section is not delimited by the {task} ablation markers")

    existing = path.read_text(encoding="utf-8") if path.exists() else ""
    span = find_section(existing, task)
    if span is not None:
        updated = existing[: span[0]] + section + existing[span[1] :]
    elif existing.strip():
        updated = f"{existing.rstrip()}\n\n{section}\n"
    else:
        updated = section + "\n"
    atomic_write(path, updated.encode("utf-8"))
