from collections.abc import Iterator

import numpy as np
from scipy.stats import truncnorm

from spectnt.autograd.tensor import Tensor
from spectnt.errors import CheckpointError

INIT_STD = 0.02


def parameter(data: np.ndarray, dtype=np.float32) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=True)


def trunc_normal(rng: np.random.Generator, shape: tuple[int, ...], std: float = INIT_STD) -> np.ndarray:
    """normal(0, std) truncated at ±2σ."""
    return truncnorm.rvs(-2.0, 2.0, loc=0.0, scale=std, size=shape, random_state=rng)


class Module:
    """Container of named parameters and child modules.

    Parameter names follow attribute names, joined with dots (``block0.spec.attn.q.weight``).
    A ``None`` attribute marks a sub-layer the configuration leaves out.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            if attr.startswith("_"):
                continue
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def param_count(self) -> int:
        return param_count(self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        mismatched = sorted(
            f"{name} {state[name].shape} != {params[name].shape}"
            for name in set(params) & set(state)
            if state[name].shape != params[name].shape
        )
        if missing or unexpected or mismatched:
            offenders = [f"missing {n}" for n in missing] + [f"unexpected {n}" for n in unexpected]
            raise CheckpointError("state does not match model", offenders + mismatched)
        for name, p in params.items():
            p.data = np.array(state[name], dtype=p.dtype, order="C")
            p.zero_grad()

    def to(self, dtype) -> "Module":
        """Convert every parameter in place (float32 for training, float64 for gradcheck)."""
        for _, p in self.named_parameters():
            p.data = p.data.astype(dtype)
            p.zero_grad()
        return self


def param_count(params: dict[str, Tensor] | Module) -> int:
    if isinstance(params, Module):
        params = params.parameters()
    return int(sum(p.size for p in params.values()))
