"""Finite-difference gradient checks over the layer set and the micro SpecTNT."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from spectnt.autograd import functional as F
from spectnt.autograd.gradcheck import DEFAULT_FLOOR, GradCheckReport, gradcheck
from spectnt.autograd.tensor import Tensor
from spectnt.model.config import ModelConfig, Variant
from spectnt.model.spectnt import SpecTNT
from spectnt.nn.attention import MultiHeadSelfAttention, TransformerEncoder
from spectnt.nn.conv import ResidualUnit
from spectnt.nn.layers import LayerNorm, Linear
from spectnt.nn.module import Module
from spectnt.training.losses import bce_loss, ce_loss_framewise

logger = logging.getLogger(__name__)

# attention key biases get an exactly zero gradient (softmax is shift invariant), so their
# central differences are round-off and need a looser denominator floor
ATTENTION_FLOOR = 1e-6
_ATTENTION_CASES = {"attention", "encoder"}

# T̂=3, F̂=4, K̂=8, D=8, two heads each, two blocks
MICRO = ModelConfig(
    task="melody", frames=3, bins=4, channels=1, p_f=1, p_t=1, k=8, d=8,
    h_k=2, h_d=2, classes=5, L=2, dropout=0.0,
)


@dataclass(frozen=True)
class SuiteResult:
    reports: dict[str, GradCheckReport]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())

    @property
    def max_error(self) -> float:
        return max((r.max_error for r in self.reports.values()), default=0.0)

    def lines(self) -> list[str]:
        out = []
        for name, r in self.reports.items():
            status = "ok" if r.passed else "FAIL"
            out.append(f"{name:<24} {status:<4} max rel err {r.max_error:.3e} (worst: {r.worst()})")
        return out


def _randomize(module: Module, rng: np.random.Generator, scale: float = 0.3) -> Module:
    """float64 parameters drawn well away from the small init, so no gradient is trivially tiny."""
    module.to(np.float64)
    for p in module.parameters().values():
        p.data = rng.normal(0.0, scale, p.shape)
    return module


LayerCase = tuple[Module, Callable[[Module, Tensor], Tensor], Tensor]


def _layer_cases(rng: np.random.Generator) -> dict[str, LayerCase]:
    def x(*shape: int) -> Tensor:
        return Tensor(rng.normal(size=shape), dtype=np.float64)

    return {
        "linear": (Linear(6, 4, rng), lambda m, v: m(v), x(2, 3, 6)),
        "layer_norm": (LayerNorm(6), lambda m, v: m(v), x(3, 6)),
        "attention": (MultiHeadSelfAttention(8, 2, 0.0, rng), lambda m, v: m(v), x(2, 5, 8)),
        "encoder": (TransformerEncoder(8, 2, rng), lambda m, v: m(v), x(2, 5, 8)),
        "residual_avgpool": (ResidualUnit(1, 4, rng, 2, 2), lambda m, v: m(v), x(2, 1, 4, 4)),
        "residual_strided": (
            ResidualUnit(2, 4, rng, 2, 2, downsample="strided"), lambda m, v: m(v), x(1, 2, 4, 4)
        ),
    }


def _model_case(
    cfg: ModelConfig, rng: np.random.Generator
) -> tuple[SpecTNT, Callable[[], Tensor]]:
    model = _randomize(SpecTNT(cfg, rng), rng)
    s = Tensor(rng.normal(size=(2, cfg.frames, cfg.bins, cfg.channels)), dtype=np.float64)
    if cfg.framewise:
        labels = rng.integers(0, cfg.classes, size=(2, cfg.t_hat))

        def loss() -> Tensor:
            return ce_loss_framewise(model(s), labels)
    else:
        targets = (rng.random((2, cfg.classes)) < 0.5).astype(np.float64)

        def loss() -> Tensor:
            return bce_loss(model(s), targets)

    return model, loss


def run_suite(seed: int = 0, max_checks: int | None = 12, layers: bool = True) -> SuiteResult:
    """Check every layer op and the micro model in all four variants (plus the clip head)."""
    rng = np.random.default_rng(seed)
    reports: dict[str, GradCheckReport] = {}
    if layers:
        for name, (module, fn, inp) in _layer_cases(rng).items():
            _randomize(module, rng)
            weights = Tensor(rng.normal(size=fn(module, inp).shape), dtype=np.float64)

            def weighted(module=module, fn=fn, inp=inp, weights=weights) -> Tensor:
                return F.sum(fn(module, inp) * weights)

            floor = ATTENTION_FLOOR if name in _ATTENTION_CASES else DEFAULT_FLOOR
            reports[name] = gradcheck(
                weighted, module.parameters(), max_checks=max_checks, rng=rng, floor=floor
            )

    for variant in Variant:
        model, loss = _model_case(MICRO.replace(variant=variant), rng)
        reports[f"model_{variant.value}"] = gradcheck(
            loss, model.parameters(), max_checks=max_checks, rng=rng, floor=ATTENTION_FLOOR
        )
    model, loss = _model_case(MICRO.replace(task="tagging", head_activation=""), rng)
    reports["model_full_clip"] = gradcheck(
        loss, model.parameters(), max_checks=max_checks, rng=rng, floor=ATTENTION_FLOOR
    )

    result = SuiteResult(reports)
    logger.info("gradcheck suite: %d checks, max relative error %.3e", len(reports), result.max_error)
    return result
