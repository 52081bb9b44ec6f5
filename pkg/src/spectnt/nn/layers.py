import numpy as np

from spectnt.autograd import functional as F
from spectnt.autograd.tensor import Tensor
from spectnt.errors import ConfigError, DimensionError
from spectnt.nn.module import Module, parameter, trunc_normal


class Linear(Module):
    """x·W + b over the last axis, shared across every leading index."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator) -> None:
        self.weight = parameter(trunc_normal(rng, (in_dim, out_dim)))
        self.bias = parameter(np.zeros(out_dim))

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim < 1 or x.shape[-1] != self.in_dim:
            raise DimensionError(
                f"linear expects last dim {self.in_dim}, got input shape {x.shape}"
            )
        x = F.match_dtype(x, self.weight)
        if x.ndim == 1:
            return F.matmul(F.reshape(x, (1, -1)), self.weight)[0] + self.bias
        return F.matmul(x, self.weight) + self.bias

    __call__ = forward


class LayerNorm(Module):
    """Per-vector standardisation over the last axis (population variance), then gain/offset."""

    def __init__(self, dim: int, eps: float = 1e-5) -> None:
        if eps <= 0:
            raise ConfigError(f"layer norm epsilon must be positive, got {eps}")
        self.gain = parameter(np.ones(dim))
        self.offset = parameter(np.zeros(dim))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.gain.shape[0]:
            raise DimensionError(f"layer norm over {self.gain.shape[0]} features got shape {x.shape}")
        x = F.match_dtype(x, self.gain)
        return F.normalize(x, 1, self.eps) * self.gain + self.offset

    __call__ = forward


class Dropout(Module):
    def __init__(self, rate: float) -> None:
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x: Tensor, train: bool, rng: np.random.Generator | None = None) -> Tensor:
        return F.dropout(x, self.rate, train, rng)

    __call__ = forward
