from spectnt.model.config import PRESETS, ModelConfig, Variant, preset
from spectnt.model.spectnt import (
    ConvModule,
    SpecTNT,
    SpecTNTBlock,
    SpectralEmbedding,
    TemporalEmbedding,
    apply_fpe,
    attach_fct,
    build_variant,
    output_head_clip,
    output_head_frame,
)

__all__ = [
    "PRESETS",
    "ConvModule",
    "ModelConfig",
    "SpecTNT",
    "SpecTNTBlock",
    "SpectralEmbedding",
    "TemporalEmbedding",
    "Variant",
    "apply_fpe",
    "attach_fct",
    "build_variant",
    "output_head_clip",
    "output_head_frame",
    "preset",
]
