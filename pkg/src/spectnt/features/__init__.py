from spectnt.features.spectrogram import (
    FEATURES,
    SpectrogramConfig,
    crop_to_pooling,
    extract_features,
    hz_to_mel,
    log_magnitude,
    mel_centers,
    mel_filterbank,
    mel_to_hz,
    spectrogram,
    stft,
)
from spectnt.features.wav import WaveBuffer, load_wav, resample, write_wav

__all__ = [
    "FEATURES",
    "SpectrogramConfig",
    "WaveBuffer",
    "crop_to_pooling",
    "extract_features",
    "hz_to_mel",
    "load_wav",
    "log_magnitude",
    "mel_centers",
    "mel_filterbank",
    "mel_to_hz",
    "resample",
    "spectrogram",
    "stft",
    "write_wav",
]
