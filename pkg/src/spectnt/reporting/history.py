import csv
import logging
import threading
import time
from collections.abc import Callable, Sequence
from pathlib import Path

logger = logging.getLogger(__name__)

Row = dict[str, float | int]


def format_value(value: float | int | None) -> str:
    """CSV cell: ints verbatim, floats with 6 significant digits, blank when missing."""
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.6g}"


def make_csv_sink(path: str | Path, columns: Sequence[str]) -> Callable[[list[Row]], None]:
    """Return a flush function that appends rows to ``path``, writing the header on first use."""
    path = Path(path)

    def sink(rows: list[Row]) -> None:
        new = not path.exists()
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", newline="") as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(row.get(c)) for c in columns])

    return sink


class HistoryBuffer:
    """Thread-safe buffer of training history rows, flushed in batches to a sink."""

    def __init__(
        self,
        flush_fn: Callable[[list[Row]], None] | None = None,
        max_size: int = 50,
        flush_interval: float = 30.0,
    ) -> None:
        self._flush_fn = flush_fn
        self.max_size = max_size
        self.flush_interval = flush_interval
        self.rows: list[Row] = []
        self._pending: list[Row] = []
        self._lock = threading.Lock()
        self._last_flush = time.monotonic()

    def add(self, row: Row) -> None:
        with self._lock:
            self.rows.append(row)
            self._pending.append(row)
            if self._should_flush():
                self._flush_locked()

    def flush(self) -> None:
        """Synchronous flush; call once training ends."""
        with self._lock:
            self._flush_locked()

    def _should_flush(self) -> bool:
        return (
            len(self._pending) >= self.max_size
            or time.monotonic() - self._last_flush >= self.flush_interval
        )

    def _flush_locked(self) -> None:
        batch = self._pending
        self._pending = []
        self._last_flush = time.monotonic()
        if batch and self._flush_fn is not None:
            self._safe_flush(batch)

    def _safe_flush(self, batch: list[Row]) -> None:
        try:
            self._flush_fn(batch)
        except Exception:
            logger.warning("spectnt: failed to flush %d history rows", len(batch), exc_info=True)
