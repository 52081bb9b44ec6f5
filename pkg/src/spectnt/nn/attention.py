import math

import numpy as np

from spectnt.autograd import functional as F
from spectnt.autograd.tensor import Tensor
from spectnt.errors import ConfigError, DimensionError
from spectnt.nn.layers import Dropout, LayerNorm, Linear
from spectnt.nn.module import Module


class MultiHeadSelfAttention(Module):
    """softmax(QKᵀ/√d_k)·V per head over the second-to-last axis; no positional terms."""

    def __init__(self, dim: int, heads: int, dropout: float, rng: np.random.Generator) -> None:
        if heads < 1 or dim % heads:
            raise ConfigError(f"model dim {dim} is not divisible by {heads} heads")
        self.q = Linear(dim, dim, rng)
        self.k = Linear(dim, dim, rng)
        self.v = Linear(dim, dim, rng)
        self.out = Linear(dim, dim, rng)
        self.attn_dropout = Dropout(dropout)
        self.heads = heads
        self.dim = dim

    def _split(self, x: Tensor) -> Tensor:
        *lead, t, _ = x.shape
        x = F.reshape(x, (*lead, t, self.heads, self.dim // self.heads))
        return F.swapaxes(x, -3, -2)

    def forward(
        self,
        x: Tensor,
        train: bool = False,
        rng: np.random.Generator | None = None,
        return_weights: bool = False,
    ) -> Tensor | tuple[Tensor, Tensor]:
        if x.ndim < 2 or x.shape[-1] != self.dim:
            raise DimensionError(f"attention over dim {self.dim} got input shape {x.shape}")
        q, k, v = self._split(self.q(x)), self._split(self.k(x)), self._split(self.v(x))
        scores = F.matmul(q, F.swapaxes(k, -1, -2)) * (1.0 / math.sqrt(self.dim // self.heads))
        weights = F.softmax(scores, axis=-1)
        mixed = F.matmul(self.attn_dropout(weights, train, rng), v)
        merged = F.reshape(F.swapaxes(mixed, -3, -2), x.shape)
        out = self.out(merged)
        if return_weights:
            return out, weights
        return out

    __call__ = forward


class FeedForward(Module):
    """Linear → GELU → Linear."""

    def __init__(self, dim: int, hidden: int, rng: np.random.Generator) -> None:
        self.fc1 = Linear(dim, hidden, rng)
        self.fc2 = Linear(hidden, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(F.gelu(self.fc1(x)))

    __call__ = forward


class TransformerEncoder(Module):
    """Pre-norm encoder: X' = X + MHSA(LN(X)); out = X' + FFN(LN(X'))."""

    def __init__(
        self,
        dim: int,
        heads: int,
        rng: np.random.Generator,
        ffn_ratio: int = 4,
        dropout: float = 0.0,
    ) -> None:
        self.norm1 = LayerNorm(dim)
        self.attn = MultiHeadSelfAttention(dim, heads, dropout, rng)
        self.norm2 = LayerNorm(dim)
        self.ffn = FeedForward(dim, ffn_ratio * dim, rng)
        self.residual_dropout = Dropout(dropout)

    @property
    def dim(self) -> int:
        return self.attn.dim

    def forward(
        self, x: Tensor, train: bool = False, rng: np.random.Generator | None = None
    ) -> Tensor:
        x = F.match_dtype(x, self.norm1.gain)
        x = x + self.residual_dropout(self.attn(self.norm1(x), train, rng), train, rng)
        return x + self.residual_dropout(self.ffn(self.norm2(x)), train, rng)

    __call__ = forward
