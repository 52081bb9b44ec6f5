from dataclasses import dataclass, field

import numpy as np

from spectnt.autograd.tensor import Tensor
from spectnt.errors import ConfigError, DimensionError, NonFiniteError


@dataclass
class AdamWState:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 5e-3
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr <= 0 or self.eps <= 0 or self.weight_decay < 0:
            raise ConfigError("AdamW needs lr > 0, eps > 0 and weight_decay >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError(f"AdamW betas must be in [0, 1), got ({self.beta1}, {self.beta2})")


def adamw_step(
    state: AdamWState, params: dict[str, Tensor], grads: dict[str, np.ndarray | None]
) -> None:
    """One bias-corrected Adam update plus decoupled decay θ ← θ − lr·λ·θ, in place.

    Every gradient is checked before anything moves; a NaN or inf aborts the step.
    """
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.shape:
            raise DimensionError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for {name}", name)

    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p.data *= 1.0 - state.lr * state.weight_decay
        p.data -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype)


class AdamW:
    """AdamW over a fixed named parameter set; gradients are read from ``Tensor.grad``."""

    def __init__(self, params: dict[str, Tensor], **settings: float) -> None:
        self.params = params
        self.state = AdamWState(**settings)

    def step(self) -> None:
        adamw_step(self.state, self.params, {n: p.grad for n, p in self.params.items()})

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()
