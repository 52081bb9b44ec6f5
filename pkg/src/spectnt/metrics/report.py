from dataclasses import dataclass, field

from spectnt.errors import ContractError


@dataclass
class MetricReport:
    """Named metric values as fractions in [0, 1], the counts behind them and degenerate-case flags."""

    values: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name, value in self.values.items():
            if not 0.0 <= value <= 1.0:
                raise ContractError(f"metric {name}={value} outside [0, 1]")
        for name, count in self.counts.items():
            if count < 0:
                raise ContractError(f"count {name}={count} is negative")

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def percent(self) -> dict[str, float]:
        return {name: 100.0 * value for name, value in self.values.items()}

    def merge(self, other: "MetricReport") -> "MetricReport":
        return MetricReport(
            {**self.values, **other.values},
            {**self.counts, **other.counts},
            self.flags + [f for f in other.flags if f not in self.flags],
        )

    def to_dict(self) -> dict:
        return {"metrics": self.percent(), "counts": dict(self.counts), "flags": list(self.flags)}
