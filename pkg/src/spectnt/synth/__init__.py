from spectnt.synth.store import load_dataset, write_dataset
from spectnt.synth.tasks import (
    CHORD_CLASSES,
    CHORD_NAMES,
    DEFAULT_SPECS,
    SynthSample,
    SynthTaskSpec,
    build_dataset,
    chord_name,
    chord_template,
    class_to_hz,
    decode_chord,
    decode_melody,
    decode_tagging,
    gen_chord_clip,
    gen_melody_clip,
    gen_tagging_clip,
    generate,
    rotate_chord_clip,
    rotate_chord_label,
    sample_seed,
    split_dataset,
)

__all__ = [
    "CHORD_CLASSES",
    "CHORD_NAMES",
    "DEFAULT_SPECS",
    "SynthSample",
    "SynthTaskSpec",
    "build_dataset",
    "chord_name",
    "chord_template",
    "class_to_hz",
    "decode_chord",
    "decode_melody",
    "decode_tagging",
    "gen_chord_clip",
    "gen_melody_clip",
    "gen_tagging_clip",
    "generate",
    "load_dataset",
    "rotate_chord_clip",
    "rotate_chord_label",
    "sample_seed",
    "split_dataset",
    "write_dataset",
]
