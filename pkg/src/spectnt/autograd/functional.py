"""Differentiable operations on ``Tensor``.

Broadcasting is deliberately narrow: two operands must have equal shapes, or one
shape must equal the trailing dims of the other (missing leading batch dims).
Anything else raises ``DimensionError``.
"""

import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf, expit

from spectnt.autograd.tensor import Function, Tensor
from spectnt.errors import ConfigError, ContractError, DimensionError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _as_tensor(value: Any, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


def _pair(a: Any, b: Any) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, _as_tensor(b, a)
    if isinstance(b, Tensor):
        return _as_tensor(a, b), b
    raise ContractError("at least one operand must be a Tensor")


def check_broadcast(op: str, a: tuple[int, ...], b: tuple[int, ...]) -> None:
    if a == b:
        return
    short, long = (a, b) if len(a) <= len(b) else (b, a)
    if long[len(long) - len(short):] != short:
        raise DimensionError(
            f"{op}: cannot broadcast shapes {a} and {b}; only leading batch dims may differ"
        )


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    return grad


def _normalize_axis(axis: int, ndim: int, op: str) -> int:
    if not -ndim <= axis < ndim:
        raise DimensionError(f"{op}: axis {axis} out of range for rank {ndim}")
    return axis % ndim


# elementwise binary


class _Binary(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        check_broadcast(self.name, a.shape, b.shape)
        self.a, self.b = a, b
        return self.compute(a, b)

    def compute(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ga, gb = self.partials(grad)
        return _unbroadcast(ga, self.a.shape), _unbroadcast(gb, self.b.shape)

    def partials(self, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


class Add(_Binary):
    name = "add"

    def compute(self, a, b):
        return a + b

    def partials(self, grad):
        return grad, grad


class Sub(_Binary):
    name = "sub"

    def compute(self, a, b):
        return a - b

    def partials(self, grad):
        return grad, -grad


class Mul(_Binary):
    name = "mul"

    def compute(self, a, b):
        return a * b

    def partials(self, grad):
        return grad * self.b, grad * self.a


class Div(_Binary):
    name = "div"

    def compute(self, a, b):
        return a / b

    def partials(self, grad):
        return grad / self.b, -grad * self.a / (self.b * self.b)


def add(a: Any, b: Any) -> Tensor:
    return Add.apply(*_pair(a, b))


def sub(a: Any, b: Any) -> Tensor:
    return Sub.apply(*_pair(a, b))


def mul(a: Any, b: Any) -> Tensor:
    return Mul.apply(*_pair(a, b))


def div(a: Any, b: Any) -> Tensor:
    return Div.apply(*_pair(a, b))


# elementwise unary


class Neg(Function):
    name = "neg"

    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Exp(Function):
    name = "exp"

    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    name = "log"

    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class Relu(Function):
    name = "relu"

    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0)

    def backward(self, grad):
        return (grad * self.mask,)


class Gelu(Function):
    """Exact GELU, x * Phi(x)."""

    name = "gelu"

    def forward(self, x):
        self.x = x
        self.cdf = 0.5 * (1.0 + erf(x / _SQRT2))
        return x * self.cdf

    def backward(self, grad):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * self.x * self.x)
        return (grad * (self.cdf + self.x * pdf),)


class Sigmoid(Function):
    name = "sigmoid"

    def forward(self, x):
        self.out = expit(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Clamp(Function):
    name = "clamp"

    def forward(self, x, lo: float, hi: float):
        self.mask = (x >= lo) & (x <= hi)
        return np.clip(x, lo, hi)

    def backward(self, grad):
        return (grad * self.mask,)


def neg(x: Tensor) -> Tensor:
    return Neg.apply(x)


def exp(x: Tensor) -> Tensor:
    return Exp.apply(x)


def log(x: Tensor) -> Tensor:
    return Log.apply(x)


def relu(x: Tensor) -> Tensor:
    return Relu.apply(x)


def gelu(x: Tensor) -> Tensor:
    return Gelu.apply(x)


def sigmoid(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    return Clamp.apply(x, lo=lo, hi=hi)


class Cast(Function):
    name = "cast"

    def forward(self, x, dtype):
        self.source = x.dtype
        self.out_dtype = np.dtype(dtype)
        return x.astype(self.out_dtype)

    def backward(self, grad):
        return (grad.astype(self.source),)


def cast(x: Tensor, dtype: Any) -> Tensor:
    """Differentiable dtype conversion; gradients flow back in the source dtype."""
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ContractError(f"cannot cast to {dtype}")
    if x.dtype == dtype:
        return x
    return Cast.apply(x, dtype=dtype)


def match_dtype(x: Tensor, like: Tensor) -> Tensor:
    return cast(x, like.dtype)


# normalisations


class Softmax(Function):
    name = "softmax"

    def forward(self, x, axis: int):
        self.axis = axis
        shifted = x - x.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        self.out = e / e.sum(axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        inner = (grad * self.out).sum(axis=self.axis, keepdims=True)
        return (self.out * (grad - inner),)


class Normalize(Function):
    """Standardise over the trailing ``n_axes`` axes with population variance."""

    name = "normalize"

    def forward(self, x, n_axes: int, eps: float):
        self.axes = tuple(range(x.ndim - n_axes, x.ndim))
        centered = x - x.mean(axis=self.axes, keepdims=True)
        var = (centered * centered).mean(axis=self.axes, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.xhat = centered * self.inv_std
        return self.xhat

    def backward(self, grad):
        mean_g = grad.mean(axis=self.axes, keepdims=True)
        mean_gx = (grad * self.xhat).mean(axis=self.axes, keepdims=True)
        return (self.inv_std * (grad - mean_g - self.xhat * mean_gx),)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return Softmax.apply(x, axis=_normalize_axis(axis, x.ndim, "softmax"))


def normalize(x: Tensor, n_axes: int = 1, eps: float = 1e-5) -> Tensor:
    if not 1 <= n_axes <= x.ndim:
        raise DimensionError(f"normalize: cannot normalise {n_axes} axes of shape {x.shape}")
    if eps <= 0:
        raise ConfigError(f"normalize: epsilon must be positive, got {eps}")
    return Normalize.apply(x, n_axes=n_axes, eps=eps)


# reductions


class Sum(Function):
    name = "sum"

    def forward(self, x, axis):
        self.shape, self.axis = x.shape, axis
        return x.sum(axis=axis)

    def backward(self, grad):
        if self.axis is not None:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Mean(Sum):
    name = "mean"

    def forward(self, x, axis):
        self.count = x.size if axis is None else int(np.prod([x.shape[a] for a in axis]))
        return super().forward(x, axis) / self.count

    def backward(self, grad):
        (g,) = super().backward(grad)
        return (g / self.count,)


def _axes(axis: int | Sequence[int] | None, ndim: int, op: str) -> tuple[int, ...] | None:
    if axis is None:
        return None
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(_normalize_axis(a, ndim, op) for a in axis))


def sum(x: Tensor, axis: int | Sequence[int] | None = None) -> Tensor:  # noqa: A001
    return Sum.apply(x, axis=_axes(axis, x.ndim, "sum"))


def mean(x: Tensor, axis: int | Sequence[int] | None = None) -> Tensor:
    return Mean.apply(x, axis=_axes(axis, x.ndim, "mean"))


# linear algebra


class MatMul(Function):
    name = "matmul"

    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise DimensionError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
        if a.shape[-1] != b.shape[-2]:
            raise DimensionError(
                f"matmul inner dimensions differ: {a.shape} @ {b.shape}"
            )
        check_broadcast("matmul", a.shape[:-2], b.shape[:-2])
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad):
        ga = np.matmul(grad, np.swapaxes(self.b, -1, -2))
        gb = np.matmul(np.swapaxes(self.a, -1, -2), grad)
        return _unbroadcast(ga, self.a.shape), _unbroadcast(gb, self.b.shape)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


# layout


class Reshape(Function):
    name = "reshape"

    def forward(self, x, shape):
        self.in_shape = x.shape
        try:
            return x.reshape(shape)
        except ValueError as exc:
            raise DimensionError(f"cannot reshape {x.shape} into {tuple(shape)}") from exc

    def backward(self, grad):
        return (grad.reshape(self.in_shape),)


class Transpose(Function):
    name = "transpose"

    def forward(self, x, axes):
        self.axes = axes
        return np.transpose(x, axes)

    def backward(self, grad):
        inverse = None if self.axes is None else tuple(np.argsort(self.axes))
        return (np.transpose(grad, inverse),)


class GetItem(Function):
    name = "getitem"

    def forward(self, x, index):
        self.shape, self.index = x.shape, index
        try:
            return x[index]
        except IndexError as exc:
            raise DimensionError(f"index {index!r} invalid for shape {x.shape}") from exc

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=grad.dtype)
        index = self.index if isinstance(self.index, tuple) else (self.index,)
        if all(i is Ellipsis or i is None or isinstance(i, (int, slice)) for i in index):
            # basic indexing never repeats an element
            out[self.index] = grad
        else:
            np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    name = "concat"

    def forward(self, *xs, axis: int):
        ref = xs[0].shape
        for x in xs[1:]:
            if x.ndim != len(ref) or any(
                d != r for i, (d, r) in enumerate(zip(x.shape, ref)) if i != axis
            ):
                raise DimensionError(
                    f"concat along axis {axis}: shapes {ref} and {x.shape} disagree off-axis"
                )
        self.axis = axis
        self.bounds = np.cumsum([x.shape[axis] for x in xs])[:-1]
        return np.concatenate(xs, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.bounds, axis=self.axis))


class Expand(Function):
    name = "expand"

    def forward(self, x, shape):
        check_broadcast("expand", x.shape, tuple(shape))
        if len(shape) < x.ndim:
            raise DimensionError(f"cannot expand {x.shape} to fewer dims {tuple(shape)}")
        self.shape = x.shape
        return np.broadcast_to(x, shape)

    def backward(self, grad):
        return (_unbroadcast(grad, self.shape),)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))


def transpose(x: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    if axes is not None:
        axes = tuple(axes)
        if sorted(a % x.ndim for a in axes) != list(range(x.ndim)) or len(axes) != x.ndim:
            raise DimensionError(f"transpose axes {axes} do not permute shape {x.shape}")
        axes = tuple(a % x.ndim for a in axes)
    return Transpose.apply(x, axes=axes)


def swapaxes(x: Tensor, a: int, b: int) -> Tensor:
    axes = list(range(x.ndim))
    a, b = _normalize_axis(a, x.ndim, "swapaxes"), _normalize_axis(b, x.ndim, "swapaxes")
    axes[a], axes[b] = axes[b], axes[a]
    return Transpose.apply(x, axes=tuple(axes))


def getitem(x: Tensor, index: Any) -> Tensor:
    return GetItem.apply(x, index=index)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    return Concat.apply(*tensors, axis=_normalize_axis(axis, ndim, "concat"))


def expand(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Broadcast ``x`` over new leading dims; ``x.shape`` must be a suffix of ``shape``."""
    return Expand.apply(x, shape=tuple(shape))


def layout(x: Tensor | Sequence[Tensor], op: str, **args: Any) -> Tensor:
    """Single entry point for the data-rearranging ops (concat, slice, reshape, transpose)."""
    if op == "concat":
        return concat(list(x), axis=args.get("axis", 0))  # type: ignore[arg-type]
    if not isinstance(x, Tensor):
        raise ContractError(f"layout op {op!r} takes a single tensor")
    if op == "slice":
        return getitem(x, args["index"])
    if op == "reshape":
        return reshape(x, args["shape"])
    if op == "transpose":
        return transpose(x, args.get("axes"))
    raise ContractError(f"unknown layout op {op!r}")


# convolution and pooling


def _pair_arg(value: int | Sequence[int], what: str) -> tuple[int, int]:
    if isinstance(value, int):
        return value, value
    pair = tuple(value)
    if len(pair) != 2:
        raise ConfigError(f"{what} must be an int or a pair, got {value!r}")
    return pair[0], pair[1]


class Conv2d(Function):
    """Cross-correlation over the last two axes; input [..., C_in, H, W]."""

    name = "conv2d"

    def forward(self, x, w, b, stride, padding):
        if x.ndim < 3 or w.ndim != 4:
            raise DimensionError(f"conv2d expects x [..,C,H,W] and w [O,C,kh,kw], got {x.shape}, {w.shape}")
        if x.shape[-3] != w.shape[1]:
            raise DimensionError(f"conv2d channel mismatch: input {x.shape} vs kernel {w.shape}")
        (sh, sw), (ph, pw) = stride, padding
        kh, kw = w.shape[2:]
        pad = [(0, 0)] * (x.ndim - 2) + [(ph, ph), (pw, pw)]
        xp = np.pad(x, pad)
        if xp.shape[-2] < kh or xp.shape[-1] < kw:
            raise DimensionError(
                f"conv2d kernel {w.shape[2:]} larger than padded input {xp.shape[-2:]}"
            )
        windows = sliding_window_view(xp, (kh, kw), axis=(-2, -1))[..., ::sh, ::sw, :, :]
        self.windows, self.w, self.padded_shape = windows, w, xp.shape
        self.stride, self.padding = (sh, sw), (ph, pw)
        out = np.einsum("...chwij,ocij->...ohw", windows, w, optimize=True)
        return out + b[:, None, None]

    def backward(self, grad):
        sh, sw = self.stride
        ph, pw = self.padding
        kh, kw = self.w.shape[2:]
        ho, wo = grad.shape[-2:]
        gw = np.einsum("...ohw,...chwij->ocij", grad, self.windows, optimize=True)
        gb = grad.sum(axis=tuple(i for i in range(grad.ndim) if i != grad.ndim - 3))
        gp = np.zeros(self.padded_shape, dtype=grad.dtype)
        for i in range(kh):
            for j in range(kw):
                contrib = np.einsum("...ohw,oc->...chw", grad, self.w[:, :, i, j], optimize=True)
                gp[..., i:i + sh * ho:sh, j:j + sw * wo:sw] += contrib
        h, w = self.padded_shape[-2:]
        gx = gp[..., ph:h - ph, pw:w - pw]
        return gx, gw, gb


class AvgPool2d(Function):
    name = "avg_pool2d"

    def forward(self, x, rf, rt):
        h, w = x.shape[-2:]
        self.rf, self.rt = rf, rt
        blocks = x.reshape(*x.shape[:-2], h // rf, rf, w // rt, rt)
        return blocks.mean(axis=(-3, -1))

    def backward(self, grad):
        g = np.repeat(np.repeat(grad, self.rf, axis=-2), self.rt, axis=-1)
        return (g / (self.rf * self.rt),)


def conv2d(
    x: Tensor,
    w: Tensor,
    b: Tensor | None = None,
    stride: int | Sequence[int] = 1,
    padding: int | Sequence[int] = 0,
) -> Tensor:
    if b is None:
        b = Tensor(np.zeros(w.shape[0], dtype=w.dtype))
    return Conv2d.apply(
        x, w, b, stride=_pair_arg(stride, "stride"), padding=_pair_arg(padding, "padding")
    )


def avg_pool2d(x: Tensor, ratio_f: int, ratio_t: int) -> Tensor:
    """Non-overlapping mean pooling over the last two axes (frequency, time)."""
    if ratio_f < 1 or ratio_t < 1:
        raise ConfigError(f"pooling ratios must be positive, got ({ratio_f}, {ratio_t})")
    if x.ndim < 2:
        raise DimensionError(f"avg_pool2d needs rank >= 2, got {x.shape}")
    h, w = x.shape[-2:]
    if h % ratio_f or w % ratio_t:
        raise ConfigError(
            f"spatial dims ({h}, {w}) are not divisible by pooling ratios ({ratio_f}, {ratio_t})"
        )
    if ratio_f == 1 and ratio_t == 1:
        return x
    return AvgPool2d.apply(x, rf=ratio_f, rt=ratio_t)


def dropout(
    x: Tensor, rate: float, train: bool, rng: np.random.Generator | None = None
) -> Tensor:
    """Inverted dropout: survivors are scaled by 1/(1-rate) so eval is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x
    if rng is None:
        raise ContractError("dropout in train mode needs a random generator")
    keep = rng.random(x.shape) >= rate
    mask = Tensor(keep.astype(x.dtype) / x.dtype.type(1.0 - rate))
    return mul(x, mask)
