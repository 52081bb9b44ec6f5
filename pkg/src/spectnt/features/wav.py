import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import soundfile as sf

from spectnt.errors import ConfigError, FileFormatError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WaveBuffer:
    """Mono samples in [-1, 1] at ``sample_rate`` Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ConfigError(f"wave buffer must be mono 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ConfigError("wave buffer holds non-finite samples")
        if self.sample_rate <= 0:
            raise ConfigError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def _fmt_offset(header: bytes) -> int:
    """Byte offset of the fmt chunk's bits-per-sample field, or 12 when no fmt chunk is found."""
    pos = 12
    while pos + 8 <= len(header):
        chunk_id, size = struct.unpack_from("<4sI", header, pos)
        if chunk_id == b"fmt ":
            return pos + 8 + 14
        pos += 8 + size + (size & 1)
    return 12


def load_wav(path: str | Path) -> WaveBuffer:
    """Read a 16-bit PCM RIFF file; stereo is averaged to mono."""
    path = Path(path)
    header = path.read_bytes()[:4096]
    if len(header) < 12:
        raise FileFormatError(f"{path}: file too short for a RIFF header", offset=len(header))
    if header[:4] != b"RIFF":
        raise FileFormatError(f"{path}: missing RIFF magic", offset=0)
    if header[8:12] != b"WAVE":
        raise FileFormatError(f"{path}: RIFF form type is not WAVE", offset=8)
    try:
        info = sf.info(str(path))
    except (RuntimeError, sf.LibsndfileError) as exc:
        raise FileFormatError(f"{path}: malformed WAV header: {exc}", offset=12) from exc
    if info.subtype != "PCM_16":
        raise FileFormatError(
            f"{path}: unsupported sample format {info.subtype}, only 16-bit PCM is read",
            offset=_fmt_offset(header),
        )
    if info.channels not in (1, 2):
        raise FileFormatError(
            f"{path}: {info.channels} channels, expected mono or stereo",
            offset=_fmt_offset(header) - 12,
        )
    data, rate = sf.read(str(path), dtype="float64", always_2d=True)
    logger.debug("read %s: %d frames, %d ch, %d Hz", path, len(data), info.channels, rate)
    return WaveBuffer(data.mean(axis=1), int(rate))


def write_wav(path: str | Path, wave: WaveBuffer) -> None:
    sf.write(str(path), np.clip(wave.samples, -1.0, 1.0), wave.sample_rate, subtype="PCM_16")


def resample(wave: WaveBuffer, target_rate: int) -> WaveBuffer:
    """Linear-interpolation resampling; duration is preserved within one sample."""
    if target_rate <= 0:
        raise ConfigError(f"target rate must be positive, got {target_rate}")
    if target_rate == wave.sample_rate:
        return wave
    n_out = int(round(len(wave.samples) * target_rate / wave.sample_rate))
    src_t = np.arange(len(wave.samples)) / wave.sample_rate
    out_t = np.arange(n_out) / target_rate
    return WaveBuffer(np.interp(out_t, src_t, wave.samples), target_rate)
