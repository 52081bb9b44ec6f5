"""Seed-keyed synthetic datasets for the three task heads.

Every generator writes onto a zero floor: active pattern cells are 1.0 (melody partials
fall off as 1/k) and uniform noise in [-σ, σ] is added on top, so with σ=0 each label is
recoverable exactly by the matching ``decode_*`` template decoder.
"""

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from spectnt.errors import ConfigError

logger = logging.getLogger(__name__)

PITCH_CLASSES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")
CHORD_NAMES = ("N",) + tuple(f"{p}:maj" for p in PITCH_CLASSES) + tuple(f"{p}:min" for p in PITCH_CLASSES)
CHORD_CLASSES = len(CHORD_NAMES)
CHORD_DIMS = 24
NO_CHORD_LEVEL = 0.25
MELODY_PARTIALS = (0, 12, 19)  # semitone offsets of the 1st, 2nd and 3rd harmonics
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class SynthTaskSpec:
    task: str = "tagging"
    classes: int = 10
    frames: int = 32
    bins: int = 64
    sigma: float = 0.1
    train_size: int = 512
    val_size: int = 128
    test_size: int = 128
    seed: int = 0
    tag_rate: float = 0.2
    midi_base: int = 36
    segment_frames: tuple[int, int] = field(default=(4, 16))

    def __post_init__(self) -> None:
        object.__setattr__(self, "segment_frames", tuple(self.segment_frames))
        self.validate()

    @property
    def total(self) -> int:
        return self.train_size + self.val_size + self.test_size

    @property
    def harmonic_tags(self) -> int:
        return (self.classes + 1) // 2

    @property
    def pitch_bins(self) -> int:
        return self.classes - 1

    def validate(self) -> None:
        if self.task not in ("tagging", "melody", "chord"):
            raise ConfigError(f"unknown synthetic task {self.task!r}")
        if min(self.train_size, self.val_size, self.test_size) < 1:
            raise ConfigError("train, val and test sizes must be positive")
        if self.sigma < 0:
            raise ConfigError(f"noise level must be non-negative, got {self.sigma}")
        if self.frames < 1:
            raise ConfigError(f"clip length must be positive, got {self.frames}")
        lo, hi = self.segment_frames
        if not 1 <= lo <= hi:
            raise ConfigError(f"segment length range {self.segment_frames} is invalid")
        if self.task == "tagging":
            if not 1 <= self.classes <= 50:
                raise ConfigError(f"tag count must be in [1, 50], got {self.classes}")
            need = 4 * self.harmonic_tags + (self.classes - self.harmonic_tags)
            if self.bins < need:
                raise ConfigError(f"{self.classes} tags need at least {need} bins, got {self.bins}")
        elif self.task == "melody":
            if self.pitch_bins < 2:
                raise ConfigError(f"melody needs at least 2 pitch bins, got {self.pitch_bins}")
            if self.bins < self.pitch_bins + MELODY_PARTIALS[-1]:
                raise ConfigError(
                    f"{self.pitch_bins} pitches with partials need at least "
                    f"{self.pitch_bins + MELODY_PARTIALS[-1]} bins, got {self.bins}"
                )
        elif self.classes != CHORD_CLASSES or self.bins != CHORD_DIMS:
            raise ConfigError(f"chord clips have {CHORD_CLASSES} classes over {CHORD_DIMS} dims")

    def replace(self, **changes) -> "SynthTaskSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["segment_frames"] = list(self.segment_frames)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SynthTaskSpec":
        return cls(**data)


DEFAULT_SPECS = {
    "tagging": SynthTaskSpec("tagging", classes=10, frames=32, bins=64),
    "melody": SynthTaskSpec("melody", classes=61, frames=64, bins=96),
    "chord": SynthTaskSpec("chord", classes=CHORD_CLASSES, frames=64, bins=CHORD_DIMS),
}


@dataclass
class SynthSample:
    features: np.ndarray  # [T, F, 1] float32
    labels: np.ndarray  # multi-hot [classes] float32, or frame classes [T] int64
    seed: int
    id: int = -1
    trajectory: np.ndarray | None = None  # melody: fractional pitch class per frame, 0 = silent


def sample_seed(spec: SynthTaskSpec, sample_id: int) -> int:
    return int(np.random.SeedSequence([spec.seed, sample_id]).generate_state(1)[0])


def _finish(spec: SynthTaskSpec, clean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    noisy = clean + rng.uniform(-spec.sigma, spec.sigma, clean.shape) if spec.sigma else clean
    return noisy[:, :, None].astype(np.float32)


# tagging


def tag_pattern(spec: SynthTaskSpec, tag: int) -> np.ndarray:
    """[T, F] pattern of one tag: a harmonic stack, or an on/off modulated exclusive bin."""
    pattern = np.zeros((spec.frames, spec.bins))
    n_harm = spec.harmonic_tags
    if tag < n_harm:
        base = n_harm + tag
        pattern[:, [h * base for h in (1, 2, 3) if h * base < 4 * n_harm]] = 1.0
    else:
        j = tag - n_harm
        period = j + 1
        on = (np.arange(spec.frames) // period) % 2 == 0
        pattern[on, 4 * n_harm + j] = 1.0
    return pattern


def tag_anchor(spec: SynthTaskSpec, tag: int) -> int:
    """The frequency bin only ``tag`` ever activates."""
    n_harm = spec.harmonic_tags
    return n_harm + tag if tag < n_harm else 4 * n_harm + tag - n_harm


def gen_tagging_clip(spec: SynthTaskSpec, seed: int, tags: list[int] | None = None) -> SynthSample:
    rng = np.random.default_rng(seed)
    if tags is None:
        tags = np.flatnonzero(rng.random(spec.classes) < spec.tag_rate).tolist()
    clean = np.zeros((spec.frames, spec.bins))
    labels = np.zeros(spec.classes, dtype=np.float32)
    for tag in tags:
        clean = np.maximum(clean, tag_pattern(spec, tag))
        labels[tag] = 1.0
    return SynthSample(_finish(spec, clean, rng), labels, seed)


def decode_tagging(spec: SynthTaskSpec, features: np.ndarray) -> np.ndarray:
    """Multi-hot guess from anchor energies; exact when σ=0."""
    energy = features[..., 0].max(axis=0)
    anchors = [tag_anchor(spec, t) for t in range(spec.classes)]
    return (energy[anchors] > 0.5).astype(np.float32)


# melody


def render_melody(spec: SynthTaskSpec, trajectory: np.ndarray) -> np.ndarray:
    """Harmonic tone [T, F] along a fractional pitch trajectory; fractions split linearly."""
    clean = np.zeros((spec.frames, spec.bins))
    for t, pitch in enumerate(trajectory):
        if pitch <= 0:
            continue
        pos = pitch - 1.0
        lo = int(np.floor(pos))
        frac = pos - lo
        for k, offset in enumerate(MELODY_PARTIALS, start=1):
            for b, w in ((lo + offset, 1.0 - frac), (lo + offset + 1, frac)):
                if w > 0 and b < spec.bins:
                    clean[t, b] += w / k
    return clean


def melody_labels(trajectory: np.ndarray) -> np.ndarray:
    """Nearest pitch class per frame, 0 where silent."""
    return np.where(trajectory > 0, np.floor(trajectory + 0.5), 0).astype(np.int64)


def random_trajectory(spec: SynthTaskSpec, rng: np.random.Generator) -> np.ndarray:
    lo, hi = spec.segment_frames
    trajectory = np.zeros(spec.frames)
    t = 0
    while t < spec.frames:
        n = int(rng.integers(lo, hi + 1))
        kind = rng.random()
        if kind < 0.2:
            pass  # silence
        elif kind < 0.7:
            trajectory[t : t + n] = rng.integers(1, spec.pitch_bins + 1)
        else:
            a, b = rng.uniform(1.0, spec.pitch_bins, size=2)
            trajectory[t : t + n] = np.linspace(a, b, n)[: spec.frames - t]
        t += n
    return trajectory


def gen_melody_clip(
    spec: SynthTaskSpec, seed: int, trajectory: np.ndarray | None = None
) -> SynthSample:
    rng = np.random.default_rng(seed)
    if trajectory is None:
        trajectory = random_trajectory(spec, rng)
    trajectory = np.asarray(trajectory, dtype=np.float64)
    if trajectory.shape != (spec.frames,):
        raise ConfigError(f"trajectory shape {trajectory.shape} != ({spec.frames},)")
    clean = render_melody(spec, trajectory)
    return SynthSample(_finish(spec, clean, rng), melody_labels(trajectory), seed, trajectory=trajectory)


def decode_melody(spec: SynthTaskSpec, features: np.ndarray) -> np.ndarray:
    """Template decoder: the strongest fundamental bin per frame, 0 when the frame is empty."""
    fundamentals = features[:, : spec.pitch_bins, 0]
    voiced = features[..., 0].max(axis=1) > 0.25
    return np.where(voiced, fundamentals.argmax(axis=1) + 1, 0).astype(np.int64)


def class_to_hz(labels: np.ndarray, midi_base: int = 36) -> np.ndarray:
    """Pitch class → Hz on the semitone grid; class 0 (non-voice) → 0 Hz."""
    labels = np.asarray(labels)
    midi = midi_base + labels - 1
    return np.where(labels > 0, 440.0 * 2.0 ** ((midi - 69) / 12.0), 0.0)


# chord


def chord_template(label: int) -> np.ndarray:
    """24-dim bass (root one-hot) + treble (triad) template; N is a flat low-energy frame."""
    if not 0 <= label < CHORD_CLASSES:
        raise ConfigError(f"chord label {label} outside 0..{CHORD_CLASSES - 1}")
    if label == 0:
        return np.full(CHORD_DIMS, NO_CHORD_LEVEL)
    root = (label - 1) % 12
    third = 4 if label <= 12 else 3
    template = np.zeros(CHORD_DIMS)
    template[root] = 1.0
    template[[12 + root, 12 + (root + third) % 12, 12 + (root + 7) % 12]] = 1.0
    return template


def chord_name(label: int) -> str:
    return CHORD_NAMES[label]


def rotate_chord_label(label: int, semitones: int) -> int:
    if label == 0:
        return 0
    group = 1 if label <= 12 else 13
    return group + (label - group + semitones) % 12


def rotate_chord_clip(sample: SynthSample, semitones: int) -> SynthSample:
    """Pitch-shift a chord clip: roll bass and treble chroma and relabel roots."""
    f = sample.features
    rotated = np.concatenate(
        [np.roll(f[:, :12], semitones, axis=1), np.roll(f[:, 12:], semitones, axis=1)], axis=1
    )
    labels = np.array([rotate_chord_label(int(y), semitones) for y in sample.labels], dtype=np.int64)
    return SynthSample(rotated, labels, sample.seed, sample.id)


def gen_chord_clip(
    spec: SynthTaskSpec, seed: int, segments: list[tuple[int, int]] | None = None
) -> SynthSample:
    """``segments`` is a list of (label, frame count); random when omitted."""
    rng = np.random.default_rng(seed)
    if segments is None:
        lo, hi = spec.segment_frames
        segments, t = [], 0
        while t < spec.frames:
            n = int(rng.integers(lo, hi + 1))
            segments.append((int(rng.integers(0, CHORD_CLASSES)), n))
            t += n
    labels = np.concatenate([np.full(n, y, dtype=np.int64) for y, n in segments])[: spec.frames]
    if len(labels) < spec.frames:
        raise ConfigError(f"segments cover {len(labels)} of {spec.frames} frames")
    clean = np.stack([chord_template(int(y)) for y in labels])
    return SynthSample(_finish(spec, clean, rng), labels, seed)


def decode_chord(features: np.ndarray) -> np.ndarray:
    """Nearest template per frame (squared distance)."""
    templates = np.stack([chord_template(y) for y in range(CHORD_CLASSES)])
    frames = features[..., 0]
    dist = ((frames[:, None, :] - templates[None, :, :]) ** 2).sum(axis=-1)
    return dist.argmin(axis=1).astype(np.int64)


# datasets

GENERATORS = {"tagging": gen_tagging_clip, "melody": gen_melody_clip, "chord": gen_chord_clip}


def generate(spec: SynthTaskSpec, sample_id: int) -> SynthSample:
    seed = sample_seed(spec, sample_id)
    sample = GENERATORS[spec.task](spec, seed)
    sample.id = sample_id
    return sample


def split_dataset(spec: SynthTaskSpec) -> dict[str, list[int]]:
    """Disjoint, seed-derived train/val/test id lists covering 0..total-1."""
    ids = np.random.default_rng(spec.seed).permutation(spec.total).tolist()
    a = spec.train_size
    b = a + spec.val_size
    return {"train": ids[:a], "val": ids[a:b], "test": ids[b:]}


def build_dataset(spec: SynthTaskSpec) -> dict[str, list[SynthSample]]:
    splits = split_dataset(spec)
    logger.info("generating %d %s clips", spec.total, spec.task)
    return {name: [generate(spec, i) for i in ids] for name, ids in splits.items()}
