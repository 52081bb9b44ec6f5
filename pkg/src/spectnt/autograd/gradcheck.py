import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from spectnt.autograd.tensor import GradTape, Tensor
from spectnt.errors import ContractError, NonFiniteError

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-8


@dataclass(frozen=True)
class GradCheckReport:
    errors: dict[str, float]
    eps: float
    tolerance: float
    checked: dict[str, int] = field(default_factory=dict)
    floor: float = DEFAULT_FLOOR

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def worst(self) -> str | None:
        if not self.errors:
            return None
        return max(self.errors, key=self.errors.__getitem__)


def relative_error(
    analytic: np.ndarray, numeric: np.ndarray, floor: float = DEFAULT_FLOOR
) -> np.ndarray:
    """|a − n| / max(|a|, |n|, floor)."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def gradcheck(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    eps: float = 1e-5,
    tolerance: float = 1e-4,
    max_checks: int | None = None,
    rng: np.random.Generator | None = None,
    floor: float = DEFAULT_FLOOR,
) -> GradCheckReport:
    """Compare tape gradients with central differences (f(θ+eps) − f(θ−eps)) / 2eps.

    ``f`` must be deterministic and read ``params`` in place. When ``max_checks`` is
    set, at most that many coordinates per parameter are perturbed, picked by ``rng``.
    ``floor`` bounds the relative-error denominator from below; raise it for parameters
    whose exact gradient is zero, where the central difference is pure round-off.
    """
    for name, p in params.items():
        if p.dtype != np.float64:
            raise ContractError(f"gradcheck needs float64 parameters; {name} is {p.dtype}")

    for p in params.values():
        p.zero_grad()
    with GradTape() as tape:
        loss = f()
    tape.backward(loss)
    analytic = {
        name: (p.grad if p.grad is not None else np.zeros_like(p.data)) for name, p in params.items()
    }

    rng = rng or np.random.default_rng(0)
    errors: dict[str, float] = {}
    checked: dict[str, int] = {}
    for name, p in params.items():
        flat = p.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_checks is not None and flat.size > max_checks:
            indices = np.sort(rng.choice(flat.size, size=max_checks, replace=False))
        numeric = np.empty(indices.size)
        for n, i in enumerate(indices):
            original = flat[i]
            flat[i] = original + eps
            plus = f().item()
            flat[i] = original - eps
            minus = f().item()
            flat[i] = original
            numeric[n] = (plus - minus) / (2 * eps)
        grad = analytic[name].reshape(-1)[indices]
        if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(numeric))):
            raise NonFiniteError(f"gradcheck found a non-finite gradient for {name}", name=name)
        errors[name] = float(relative_error(grad, numeric, floor).max(initial=0.0))
        checked[name] = int(indices.size)
        logger.debug("gradcheck %s: max relative error %.3e over %d coords", name, errors[name], indices.size)

    for p in params.values():
        p.zero_grad()
    return GradCheckReport(
        errors=errors, eps=eps, tolerance=tolerance, checked=checked, floor=floor
    )
