from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Any

from spectnt.errors import ConfigError


class Variant(str, Enum):
    FULL = "full"
    A1 = "A1"  # no TE→FCT injection, FCT is a learnable vector
    A2 = "A2"  # bridges read/write the full flattened spectral frame
    A3 = "A3"  # temporal Transformer only

    @classmethod
    def parse(cls, value: "str | Variant") -> "Variant":
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(
                f"unknown variant {value!r}; expected one of {[v.value for v in cls]}"
            ) from None


TASKS = ("tagging", "melody", "chord")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture settings; one row of the per-task settings table plus input geometry.

    ``frames`` is the maximum input length T and fixes the learnable TE length T/p_t;
    ``bins`` is the input frequency size F and ``channels`` the input channel count K.
    """

    task: str = "tagging"
    frames: int = 196
    bins: int = 128
    channels: int = 1
    p_f: int = 1
    p_t: int = 4
    k: int = 96
    d: int = 96
    h_k: int = 4
    h_d: int = 8
    classes: int = 50
    L: int = 3
    dropout: float = 0.15
    variant: Variant = Variant.FULL
    conv_depth: int = 1
    ffn_ratio: int = 4
    downsample: str = "avgpool"
    head_activation: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if not self.head_activation:
            activation = "sigmoid" if self.task == "tagging" else "softmax"
            object.__setattr__(self, "head_activation", activation)
        self.validate()

    @property
    def framewise(self) -> bool:
        return self.task != "tagging"

    @property
    def t_hat(self) -> int:
        return self.frames // self.p_t

    @property
    def f_hat(self) -> int:
        return self.bins // self.p_f

    @property
    def o_d(self) -> int | tuple[str, int]:
        return ("T", self.classes) if self.framewise else self.classes

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        for name in ("frames", "bins", "channels", "p_f", "p_t", "k", "d", "h_k", "h_d",
                     "classes", "L", "conv_depth", "ffn_ratio"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive int, got {value!r}")
        if self.k % self.h_k:
            raise ConfigError(f"k={self.k} is not divisible by h_k={self.h_k}")
        if self.d % self.h_d:
            raise ConfigError(f"d={self.d} is not divisible by h_d={self.h_d}")
        if self.bins % self.p_f or self.frames % self.p_t:
            raise ConfigError(
                f"input ({self.frames} frames, {self.bins} bins) is not divisible by "
                f"pooling ratios (p_f={self.p_f}, p_t={self.p_t})"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.downsample not in ("avgpool", "strided"):
            raise ConfigError(f"downsample must be 'avgpool' or 'strided', got {self.downsample!r}")
        if self.head_activation not in ("sigmoid", "softmax"):
            raise ConfigError(f"head_activation must be sigmoid or softmax, got {self.head_activation!r}")
        if self.task == "tagging" and self.head_activation != "sigmoid":
            raise ConfigError("clip-level tagging head is always sigmoid")

    def replace(self, **changes: Any) -> "ModelConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["variant"] = self.variant.value
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown model config keys: {', '.join(unknown)}")
        return cls(**data)


# Per-task settings. Input geometry: tagging 4.54 s mel frames (194, cropped to a multiple of
# p_t; TE sized for 196), melody 3 s linear bins cropped to 1024, chord 400 chroma frames.
PRESETS: dict[str, dict[str, Any]] = {
    "tagging": dict(task="tagging", frames=196, bins=128, p_f=1, p_t=4, k=96, d=96,
                    h_k=4, h_d=8, classes=50),
    "melody": dict(task="melody", frames=144, bins=1024, p_f=4, p_t=1, k=128, d=128,
                   h_k=8, h_d=8, classes=481),
    "chord": dict(task="chord", frames=400, bins=24, p_f=1, p_t=1, k=64, d=256,
                  h_k=4, h_d=8, classes=25),
}


def preset(name: str, **overrides: Any) -> ModelConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    return ModelConfig(**{**PRESETS[name], **overrides})
