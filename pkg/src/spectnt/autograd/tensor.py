import contextvars
import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from spectnt.errors import ContractError, DimensionError

logger = logging.getLogger(__name__)

FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

_ids = itertools.count()
_active_tape: contextvars.ContextVar["GradTape | None"] = contextvars.ContextVar(
    "spectnt_active_tape", default=None
)


class Tensor:
    """Dense float32/float64 array with an optional gradient buffer.

    Operations on tensors are recorded only while a ``GradTape`` is active and at
    least one input requires a gradient; outside a tape every op is plain numpy.
    """

    __array_priority__ = 100

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        dtype: Any = None,
        name: str | None = None,
    ) -> None:
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None and not isinstance(data, (np.ndarray, np.generic)):
            dtype = np.float32
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in FLOAT_DTYPES:
            if dtype is not None:
                raise ContractError(f"unsupported tensor dtype {arr.dtype}")
            arr = arr.astype(np.float32)
        # ascontiguousarray would promote 0-d scalars to shape (1,)
        self.data: np.ndarray = arr if arr.flags.c_contiguous else arr.copy(order="C")
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self.id = next(_ids)
        self._tape: GradTape | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.dtype)

    def astype(self, dtype: Any) -> "Tensor":
        """Return a new leaf with converted data; gradients are not carried over."""
        return Tensor(self.data.astype(dtype), requires_grad=self.requires_grad, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray) -> None:
        if grad.shape != self.shape:
            raise DimensionError(
                f"gradient shape {grad.shape} does not match tensor shape {self.shape}"
            )
        grad = grad.astype(self.dtype, copy=True)
        self.grad = grad if self.grad is None else self.grad + grad

    def backward(self) -> None:
        if self._tape is None:
            raise ContractError("tensor was not produced on a GradTape; nothing to differentiate")
        self._tape.backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    # arithmetic dispatches to the functional module (bound at the bottom of this file)

    def __add__(self, other: Any) -> "Tensor":
        return F.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        return F.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        return F.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        return F.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        return F.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        return F.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        return F.div(self, other)

    def __rtruediv__(self, other: Any) -> "Tensor":
        return F.div(other, self)

    def __neg__(self) -> "Tensor":
        return F.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return F.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        return F.getitem(self, index)

    def sum(self, axis: int | tuple[int, ...] | None = None) -> "Tensor":
        return F.sum(self, axis)

    def mean(self, axis: int | tuple[int, ...] | None = None) -> "Tensor":
        return F.mean(self, axis)

    def reshape(self, *shape: int | Sequence[int]) -> "Tensor":
        if len(shape) == 1 and not isinstance(shape[0], int):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        return F.transpose(self, axes or None)

    def exp(self) -> "Tensor":
        return F.exp(self)

    def log(self) -> "Tensor":
        return F.log(self)


class Function:
    """A differentiable operation on ndarrays.

    ``forward`` keeps whatever intermediates ``backward`` needs on ``self``;
    ``backward`` returns one gradient (or None) per input.
    """

    name = "op"
    # set by forward when the result dtype differs from the inputs'
    out_dtype: np.dtype | None = None

    def forward(self, *inputs: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        dtypes = {t.dtype for t in inputs}
        if len(dtypes) > 1:
            raise ContractError(f"{cls.name}: mixed dtypes {sorted(str(d) for d in dtypes)}")
        fn = cls()
        result = fn.forward(*(t.data for t in inputs), **kwargs)
        out_dtype = inputs[0].dtype if fn.out_dtype is None else fn.out_dtype
        out = Tensor(np.asarray(result, dtype=out_dtype))
        tape = _active_tape.get()
        if tape is not None and any(t.requires_grad for t in inputs):
            out.requires_grad = True
            tape.record(fn, inputs, out)
        return out


@dataclass(frozen=True)
class TapeRecord:
    op: str
    input_ids: tuple[int, ...]
    output_id: int
    fn: Function


class GradTape:
    """Ordered record of differentiable operations, replayed in reverse by ``backward``.

    Usage::

        with GradTape() as tape:
            loss = model_loss(params)
        tape.backward(loss)

    Records are appended in execution order, so the list is already topological.
    A tape belongs to one thread; do not share it.
    """

    def __init__(self) -> None:
        self.records: list[TapeRecord] = []
        self._tensors: dict[int, Tensor] = {}
        self._token: contextvars.Token | None = None

    def __enter__(self) -> "GradTape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc_info: object) -> None:
        if self._token is not None:
            _active_tape.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self.records)

    def record(self, fn: Function, inputs: Sequence[Tensor], output: Tensor) -> None:
        for t in inputs:
            self._tensors.setdefault(t.id, t)
        self.records.append(TapeRecord(fn.name, tuple(t.id for t in inputs), output.id, fn))
        output._tape = self

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into ``grad`` of every leaf that requires it."""
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not self.records:
            raise ContractError("backward called on an empty tape")
        if loss._tape is not self:
            raise ContractError("loss was not recorded on this tape")

        grads: dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
        for rec in reversed(self.records):
            grad = grads.pop(rec.output_id, None)
            if grad is None:
                continue
            for tid, g in zip(rec.input_ids, rec.fn.backward(grad)):
                if g is None or not self._tensors[tid].requires_grad:
                    continue
                grads[tid] = grads[tid] + g if tid in grads else g

        # whatever is left belongs to tensors no record produced: the leaves
        for tid, grad in grads.items():
            leaf = self._tensors.get(tid)
            if leaf is not None:
                leaf.accumulate_grad(grad)


def active_tape() -> GradTape | None:
    return _active_tape.get()


from spectnt.autograd import functional as F  # noqa: E402
