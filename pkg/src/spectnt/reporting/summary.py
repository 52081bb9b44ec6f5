from collections.abc import Sequence
from dataclasses import dataclass, field

Row = dict[str, float | int]


@dataclass(frozen=True)
class VariantSummary:
    variant: str
    params: int
    steps: int
    final_loss: float | None
    best_step: int | None
    best: dict[str, float] = field(default_factory=dict)


def summarize_history(
    variant: str, params: int, history: Sequence[Row], primary: str
) -> VariantSummary:
    """Collapse one training history into its final loss and best evaluation row."""
    evals = [row for row in history if primary in row]
    best_row = max(evals, key=lambda row: row[primary]) if evals else None
    return VariantSummary(
        variant=variant,
        params=params,
        steps=len(history),
        final_loss=float(history[-1]["loss"]) if history else None,
        best_step=int(best_row["step"]) if best_row else None,
        best={k: float(v) for k, v in best_row.items() if k not in ("step", "loss")} if best_row else {},
    )


def rank_variants(summaries: Sequence[VariantSummary], primary: str) -> list[VariantSummary]:
    """Order by best primary metric, highest first; variants never evaluated go last."""
    return sorted(summaries, key=lambda s: (primary not in s.best, -s.best.get(primary, 0.0), s.variant))
