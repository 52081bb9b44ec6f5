"""Log-magnitude spectrogram features: Hann-windowed STFT, optional HTK mel projection."""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from spectnt.errors import ConfigError, ContractError
from spectnt.features.wav import WaveBuffer, resample

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-5


@dataclass(frozen=True)
class SpectrogramConfig:
    sample_rate: int
    window: int
    hop: int
    mel_bins: int | None = None
    log_floor: float = LOG_FLOOR
    segment_seconds: float = 0.0
    max_bins: int | None = None

    def __post_init__(self) -> None:
        self.validate()

    @property
    def fft_bins(self) -> int:
        return self.window // 2 + 1

    @property
    def segment_samples(self) -> int:
        return int(round(self.segment_seconds * self.sample_rate))

    def frame_count(self, n_samples: int) -> int:
        return (n_samples - self.window) // self.hop + 1

    def validate(self) -> None:
        if self.sample_rate <= 0 or self.window <= 0 or self.hop <= 0:
            raise ConfigError("sample rate, window and hop must be positive")
        if self.hop > self.window:
            raise ConfigError(f"hop {self.hop} exceeds window {self.window}")
        if self.mel_bins is not None and not 1 <= self.mel_bins <= self.fft_bins:
            raise ConfigError(f"mel bins must be in [1, {self.fft_bins}], got {self.mel_bins}")
        if self.log_floor <= 0:
            raise ConfigError(f"log floor must be positive, got {self.log_floor}")

    def to_dict(self) -> dict:
        return asdict(self)


FEATURES = {
    "tagging": SpectrogramConfig(22050, 1024, 512, mel_bins=128, segment_seconds=4.54),
    # 1025 linear bins lose the Nyquist bin so p_f=4 divides F
    "melody": SpectrogramConfig(16000, 2048, 320, segment_seconds=3.0, max_bins=1024),
}


def stft(wave: WaveBuffer, cfg: SpectrogramConfig) -> np.ndarray:
    """Complex frames [T, window/2+1]; frame t starts at sample t·hop, no centre padding."""
    if len(wave.samples) < cfg.window:
        raise ContractError(
            f"signal of {len(wave.samples)} samples is shorter than the {cfg.window}-sample window"
        )
    frames = sliding_window_view(wave.samples, cfg.window)[:: cfg.hop]
    return np.fft.rfft(frames * get_window("hann", cfg.window, fftbins=True), axis=-1)


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def _mel_points(cfg: SpectrogramConfig) -> np.ndarray:
    if not cfg.mel_bins:
        raise ConfigError("mel filterbank needs mel_bins >= 1")
    return mel_to_hz(np.linspace(0.0, hz_to_mel(cfg.sample_rate / 2), cfg.mel_bins + 2))


def mel_centers(cfg: SpectrogramConfig) -> np.ndarray:
    """Peak frequency in Hz of every mel filter."""
    return _mel_points(cfg)[1:-1]


def mel_filterbank(cfg: SpectrogramConfig) -> np.ndarray:
    """Unnormalised HTK triangles [mel_bins, window/2+1] spanning 0..sr/2."""
    edges = _mel_points(cfg)
    freqs = np.arange(cfg.fft_bins) * cfg.sample_rate / cfg.window
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lower) / (centre - lower)
    falling = (upper - freqs) / (upper - centre)
    return np.maximum(0.0, np.minimum(rising, falling))


def log_magnitude(x: np.ndarray, floor: float = LOG_FLOOR) -> np.ndarray:
    if floor <= 0:
        raise ConfigError(f"log floor must be positive, got {floor}")
    return np.log(np.maximum(np.abs(x), floor))


def spectrogram(wave: WaveBuffer, cfg: SpectrogramConfig) -> np.ndarray:
    """Log-magnitude features [T, F] for a buffer already at ``cfg.sample_rate``."""
    mag = np.abs(stft(wave, cfg))
    if cfg.mel_bins:
        mag = mag @ mel_filterbank(cfg).T
    if cfg.max_bins is not None:
        mag = mag[:, : cfg.max_bins]
    return log_magnitude(mag, cfg.log_floor)


def extract_features(task: str, wave: WaveBuffer, cfg: SpectrogramConfig | None = None) -> np.ndarray:
    """Task-specific input spectrogram [T, F, 1] (float32) from the leading segment of ``wave``."""
    if cfg is None:
        if task not in FEATURES:
            raise ConfigError(f"no feature settings for task {task!r}; expected one of {sorted(FEATURES)}")
        cfg = FEATURES[task]
    wave = resample(wave, cfg.sample_rate)
    need = cfg.segment_samples
    if len(wave.samples) < need:
        raise ContractError(
            f"{task} segment needs {need} samples at {cfg.sample_rate} Hz, got {len(wave.samples)}"
        )
    if need:
        wave = WaveBuffer(wave.samples[:need], wave.sample_rate)
    feats = spectrogram(wave, cfg)
    logger.debug("%s features: %d frames x %d bins", task, *feats.shape)
    return feats[:, :, None].astype(np.float32)


def crop_to_pooling(features: np.ndarray, p_f: int, p_t: int) -> np.ndarray:
    """Crop [T, F, ..] to the largest multiples of the pooling ratios."""
    t, f = features.shape[0], features.shape[1]
    return features[: t - t % p_t, : f - f % p_f]
