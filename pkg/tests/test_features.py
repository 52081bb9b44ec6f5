import struct

import numpy as np
import pytest
from numpy.lib.stride_tricks import sliding_window_view
from numpy.testing import assert_allclose, assert_array_equal
from scipy.signal import get_window

from spectnt.errors import ConfigError, ContractError, FileFormatError
from spectnt.features import (
    FEATURES,
    SpectrogramConfig,
    WaveBuffer,
    crop_to_pooling,
    extract_features,
    hz_to_mel,
    load_wav,
    log_magnitude,
    mel_centers,
    mel_filterbank,
    mel_to_hz,
    resample,
    spectrogram,
    stft,
    write_wav,
)


def riff(payload: bytes, rate: int = 8000, channels: int = 1, bits: int = 16) -> bytes:
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", 1, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def sine(freq: float, rate: int, seconds: float) -> WaveBuffer:
    t = np.arange(int(rate * seconds)) / rate
    return WaveBuffer(0.5 * np.sin(2 * np.pi * freq * t), rate)


class TestWaveBuffer:
    def test_rejects_multichannel_array(self):
        with pytest.raises(ConfigError):
            WaveBuffer(np.zeros((10, 2)), 8000)

    def test_rejects_non_finite(self):
        with pytest.raises(ConfigError):
            WaveBuffer(np.array([0.0, np.nan]), 8000)

    def test_duration(self):
        assert WaveBuffer(np.zeros(16000), 8000).duration == 2.0


class TestLoadWav:
    def test_full_scale_sample(self, tmp_path):
        path = tmp_path / "max.wav"
        path.write_bytes(riff(struct.pack("<3h", 32767, 0, -32768)))
        wave = load_wav(path)
        assert wave.sample_rate == 8000
        assert_allclose(wave.samples, [32767 / 32768, 0.0, -1.0])

    def test_stereo_is_averaged(self, tmp_path):
        path = tmp_path / "stereo.wav"
        path.write_bytes(riff(struct.pack("<4h", 16384, 8192, -16384, 0), channels=2))
        assert_allclose(load_wav(path).samples, [0.375, -0.25])

    def test_round_trip_within_quantisation(self, tmp_path):
        wave = sine(440.0, 8000, 0.1)
        write_wav(tmp_path / "a.wav", wave)
        assert_allclose(load_wav(tmp_path / "a.wav").samples, wave.samples, atol=1 / 32768)

    @pytest.mark.parametrize(
        "data, offset",
        [
            (b"RIFX" + bytes(40), 0),
            (b"RIFF" + bytes(4) + b"AVI " + bytes(32), 8),
            (b"RIFF", 4),
        ],
    )
    def test_bad_header_offsets(self, tmp_path, data, offset):
        path = tmp_path / "bad.wav"
        path.write_bytes(data)
        with pytest.raises(FileFormatError) as exc:
            load_wav(path)
        assert exc.value.offset == offset
        assert f"byte offset {offset}" in str(exc.value)

    def test_24_bit_is_rejected_at_bits_field(self, tmp_path):
        path = tmp_path / "deep.wav"
        path.write_bytes(riff(bytes(12), bits=24))
        with pytest.raises(FileFormatError, match="PCM_24") as exc:
            load_wav(path)
        assert exc.value.offset == 34


class TestResample:
    def test_same_rate_is_identity(self):
        wave = sine(100.0, 8000, 0.01)
        assert resample(wave, 8000) is wave

    def test_length_follows_rate(self):
        assert len(resample(sine(100.0, 8000, 0.5), 16000).samples) == 8000
        assert len(resample(sine(100.0, 22050, 1.0), 16000).samples) == 16000

    def test_ramp_stays_linear(self):
        wave = WaveBuffer(np.linspace(0.0, 0.999, 1000), 1000)
        out = resample(wave, 500)
        assert_allclose(out.samples, wave.samples[::2], atol=1e-12)

    def test_bad_rate(self):
        with pytest.raises(ConfigError):
            resample(sine(100.0, 8000, 0.01), 0)

    def test_tone_keeps_its_frequency(self):
        out = resample(sine(440.0, 22050, 1.0), 16000)
        n = len(out.samples)
        peak = np.argmax(np.abs(np.fft.rfft(out.samples)))
        assert abs(peak - 440.0 * n / 16000) <= 1


class TestSpectrogram:
    def test_sine_peaks_at_its_bin(self):
        cfg = SpectrogramConfig(16000, 2048, 320)
        feats = spectrogram(sine(1000.0, 16000, 0.5), cfg)
        assert feats.shape[1] == 1025
        assert np.argmax(feats.mean(axis=0)) == 128

    def test_mel_peak_near_tone(self):
        cfg = FEATURES["tagging"]
        feats = spectrogram(sine(440.0, 22050, 0.5), cfg)
        assert feats.shape[1] == 128
        assert abs(mel_centers(cfg)[np.argmax(feats.mean(axis=0))] - 440.0) < 60.0

    def test_silence_hits_log_floor(self):
        cfg = SpectrogramConfig(8000, 256, 128)
        feats = spectrogram(WaveBuffer(np.zeros(1024), 8000), cfg)
        assert_array_equal(feats, np.log(1e-5))

    def test_frame_start_positions(self):
        cfg = SpectrogramConfig(8000, 256, 100)
        wave = WaveBuffer(np.zeros(556), 8000)
        assert stft(wave, cfg).shape == (cfg.frame_count(556), 129) == (4, 129)

    def test_short_signal(self):
        with pytest.raises(ContractError):
            stft(WaveBuffer(np.zeros(100), 8000), SpectrogramConfig(8000, 256, 128))

    def test_shift_by_hop_shifts_frames(self, rng):
        cfg = SpectrogramConfig(8000, 256, 64)
        samples = rng.standard_normal(4096)
        full = stft(WaveBuffer(samples, 8000), cfg)
        shifted = stft(WaveBuffer(samples[3 * cfg.hop :], 8000), cfg)
        n = shifted.shape[0]
        assert_allclose(shifted[1 : n - 1], full[4 : n + 2], atol=1e-5)

    @staticmethod
    def two_sided_energy(frames, window):
        power = np.abs(frames) ** 2
        nyquist = power[:, -1] if window % 2 == 0 else 0.0
        return power[:, 0] + nyquist + 2 * power[:, 1 : (window + 1) // 2].sum(axis=1)

    def test_parseval_per_frame(self, rng):
        cfg = SpectrogramConfig(8000, 512, 128)
        samples = rng.standard_normal(4000)
        frames = stft(WaveBuffer(samples, 8000), cfg)
        windowed = sliding_window_view(samples, 512)[::128] * get_window("hann", 512, fftbins=True)
        expected = 512 * (windowed**2).sum(axis=1)
        assert_allclose(self.two_sided_energy(frames, 512), expected, rtol=1e-3)

    def test_tone_energy_scales_with_window_energy(self):
        # bin 40 of a 512-point frame at 8 kHz
        cfg = SpectrogramConfig(8000, 512, 128)
        frames = stft(sine(40 * 8000 / 512, 8000, 0.5), cfg)
        window_energy = 3 * 512 / 8
        expected = 512 * (0.5**2 / 2) * window_energy
        assert_allclose(self.two_sided_energy(frames, 512), expected, rtol=1e-3)

    def test_config_checks(self):
        with pytest.raises(ConfigError):
            SpectrogramConfig(8000, 256, 512)
        with pytest.raises(ConfigError):
            SpectrogramConfig(8000, 256, 128, mel_bins=200)

    def test_log_magnitude_floor(self):
        assert_allclose(log_magnitude(np.array([0.0, 1.0, -np.e])), [np.log(1e-5), 0.0, 1.0])
        with pytest.raises(ConfigError):
            log_magnitude(np.ones(2), floor=0.0)


class TestMel:
    def test_htk_reference_point(self):
        assert hz_to_mel(1000.0) == pytest.approx(1000.0, abs=0.1)
        assert_allclose(mel_to_hz(hz_to_mel([0.0, 440.0, 8000.0])), [0.0, 440.0, 8000.0])

    def test_filterbank_triangles(self):
        cfg = SpectrogramConfig(16000, 512, 256, mel_bins=40)
        bank = mel_filterbank(cfg)
        assert bank.shape == (40, 257)
        assert bank.min() >= 0.0 and bank.max() <= 1.0
        centres = np.argmax(bank, axis=1)
        assert np.all(np.diff(centres) >= 0)
        assert mel_centers(cfg)[-1] < 8000.0


class TestExtractFeatures:
    @pytest.mark.parametrize(
        "task, rate, frames, bins", [("tagging", 22050, 194, 128), ("melody", 16000, 144, 1024)]
    )
    def test_segment_geometry(self, task, rate, frames, bins):
        feats = extract_features(task, sine(440.0, rate, 5.0))
        assert feats.shape == (frames, bins, 1)
        assert feats.dtype == np.float32

    def test_resamples_first(self):
        feats = extract_features("melody", sine(440.0, 44100, 3.0))
        assert feats.shape == (144, 1024, 1)

    def test_short_input(self):
        with pytest.raises(ContractError, match="segment"):
            extract_features("tagging", sine(440.0, 22050, 1.0))

    def test_unknown_task(self):
        with pytest.raises(ConfigError):
            extract_features("chord", sine(440.0, 22050, 1.0))

    def test_crop_to_pooling(self):
        assert crop_to_pooling(np.zeros((194, 128, 1)), 1, 4).shape == (192, 128, 1)
        assert crop_to_pooling(np.zeros((144, 1025, 1)), 4, 1).shape == (144, 1024, 1)
