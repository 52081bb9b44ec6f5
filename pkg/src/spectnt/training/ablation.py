import logging
from collections.abc import Iterable, Sequence
from dataclasses import replace

from spectnt.model.config import ModelConfig, Variant
from spectnt.model.spectnt import build_variant
from spectnt.reporting.summary import VariantSummary, summarize_history
from spectnt.synth.tasks import SynthSample
from spectnt.training.loop import PRIMARY_METRIC, TrainConfig, train_loop

logger = logging.getLogger(__name__)


def run_ablation(
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    train: Sequence[SynthSample],
    val: Sequence[SynthSample],
    variants: Iterable[Variant | str] = tuple(Variant),
) -> list[VariantSummary]:
    """Train each variant from the same seed on the same split and summarise the runs."""
    primary = PRIMARY_METRIC[model_cfg.task]
    summaries = []
    for variant in map(Variant.parse, variants):
        model = build_variant(model_cfg.replace(variant=variant), seed=train_cfg.seed)
        out_dir = train_cfg.out_dir / variant.value if train_cfg.out_dir else None
        logger.info("ablation: training %s (%d parameters)", variant.value, model.param_count())
        history = train_loop(replace(train_cfg, out_dir=out_dir), model, train, val)
        summaries.append(summarize_history(variant.value, model.param_count(), history, primary))
    return summaries
