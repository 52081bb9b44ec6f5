import numpy as np

from spectnt.autograd import functional as F
from spectnt.autograd.tensor import Tensor
from spectnt.errors import ConfigError, DimensionError
from spectnt.nn.module import Module, parameter, trunc_normal


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: int,
        rng: np.random.Generator,
        stride: tuple[int, int] = (1, 1),
    ) -> None:
        self.weight = parameter(trunc_normal(rng, (out_channels, in_channels, kernel, kernel)))
        self.bias = parameter(np.zeros(out_channels))
        self.stride = stride
        self.padding = kernel // 2

    def forward(self, x: Tensor) -> Tensor:
        x = F.match_dtype(x, self.weight)
        return F.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)

    __call__ = forward


class ConvLayerNorm(Module):
    """Layer norm of a [.., C, F, T] feature map over (C, F, T), with per-channel gain/offset."""

    def __init__(self, channels: int, eps: float = 1e-5) -> None:
        self.gain = parameter(np.ones(channels))
        self.offset = parameter(np.zeros(channels))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        x = F.match_dtype(x, self.gain)
        n = x.ndim
        channels_last = (*range(n - 3), n - 2, n - 1, n - 3)
        y = F.transpose(F.normalize(x, 3, self.eps), channels_last)
        y = y * self.gain + self.offset
        return F.transpose(y, tuple(np.argsort(channels_last)))

    __call__ = forward


class ResidualUnit(Module):
    """Pre-activation residual unit (norm → ReLU → conv, twice) followed by pooling.

    Input and output are [.., K, F, T]. A 1×1 projection on the skip path exists only
    when the channel count changes. With ``downsample="strided"`` the first convolution
    strides by the pooling ratios and the skip path is average-pooled instead.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        ratio_f: int = 1,
        ratio_t: int = 1,
        kernel: int = 3,
        downsample: str = "avgpool",
    ) -> None:
        if downsample not in ("avgpool", "strided"):
            raise ConfigError(f"unknown downsample mode {downsample!r}")
        strided = downsample == "strided"
        self.norm1 = ConvLayerNorm(in_channels)
        self.conv1 = Conv2d(
            in_channels, out_channels, kernel, rng, stride=(ratio_f, ratio_t) if strided else (1, 1)
        )
        self.norm2 = ConvLayerNorm(out_channels)
        self.conv2 = Conv2d(out_channels, out_channels, kernel, rng)
        self.proj = Conv2d(in_channels, out_channels, 1, rng) if in_channels != out_channels else None
        self.ratio_f = ratio_f
        self.ratio_t = ratio_t
        self.downsample = downsample

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim < 3:
            raise DimensionError(f"residual unit expects [.., K, F, T], got {x.shape}")
        f, t = x.shape[-2:]
        if f % self.ratio_f or t % self.ratio_t:
            raise ConfigError(
                f"feature map ({f}, {t}) not divisible by pooling ratios ({self.ratio_f}, {self.ratio_t})"
            )
        x = F.match_dtype(x, self.norm1.gain)
        skip = self.proj(x) if self.proj is not None else x
        h = self.conv1(F.relu(self.norm1(x)))
        h = self.conv2(F.relu(self.norm2(h)))
        if self.downsample == "strided":
            return F.avg_pool2d(skip, self.ratio_f, self.ratio_t) + h
        return F.avg_pool2d(skip + h, self.ratio_f, self.ratio_t)

    __call__ = forward
