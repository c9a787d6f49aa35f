import numpy as np
import pytest

from simpf.audio import AudioClip
from simpf.errors import ConfigError
from simpf.features import (
    MelSpectrogram,
    SpectrogramConfig,
    _windowed_frames,
    hann_window,
    hz_to_mel,
    log_mel,
    mel_filterbank,
    stft_power,
)
from oracles import dft_power_frame


class TestHannWindow:
    def test_n4_closed_form(self):
        np.testing.assert_allclose(hann_window(4), [0.0, 0.5, 1.0, 0.5], atol=1e-15)

    def test_n1_degenerate(self):
        np.testing.assert_array_equal(hann_window(1), [0.0])

    def test_n1024_symmetry(self):
        w = hann_window(1024)
        # periodic form: w[i] == w[n - i] for i = 1..n-1, peak at n/2
        np.testing.assert_allclose(w[1:], w[1:][::-1], atol=1e-12)
        assert w[512] == pytest.approx(1.0)

    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            hann_window(0)


class TestSpectrogramConfig:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ConfigError):
            SpectrogramConfig(n_fft=1000)

    def test_rejects_bad_hop(self):
        with pytest.raises(ConfigError):
            SpectrogramConfig(hop=0)
        with pytest.raises(ConfigError):
            SpectrogramConfig(hop=2048)

    def test_rejects_bad_band(self):
        cfg = SpectrogramConfig(f_min=5000.0, f_max=4000.0)
        with pytest.raises(ConfigError):
            cfg.effective_f_max(16000)
        cfg = SpectrogramConfig(f_max=9000.0)
        with pytest.raises(ConfigError):
            cfg.effective_f_max(16000)  # above nyquist


class TestStftPower:
    def test_frame_count_10s_44k(self):
        clip = AudioClip(samples=np.zeros(441000), sample_rate=44100)
        power = stft_power(clip, SpectrogramConfig())
        assert power.shape == (513, 1379)

    def test_zero_clip_zero_power(self):
        clip = AudioClip(samples=np.zeros(5000), sample_rate=16000)
        power = stft_power(clip, SpectrogramConfig())
        assert np.all(power == 0)

    def test_tone_peak_bin_matches_direct_dft(self):
        sr, f0 = 16000, 1000.0
        t = np.arange(16000) / sr
        clip = AudioClip(samples=0.9 * np.sin(2 * np.pi * f0 * t), sample_rate=sr)
        cfg = SpectrogramConfig()
        power = stft_power(clip, cfg)
        expected_bin = round(f0 * cfg.n_fft / sr)
        assert expected_bin == 64
        peaks = power.argmax(axis=0)
        # interior frames hit the exact bin; the two boundary frames see the
        # reflection crease and may leak into a neighbor
        assert np.all(peaks[1:-1] == expected_bin)
        assert np.all(np.abs(peaks - expected_bin) <= 1)
        # one frame checked against a direct O(n^2) DFT
        frame = _windowed_frames(clip, cfg)[20]
        np.testing.assert_allclose(
            power[:, 20], dft_power_frame(frame), rtol=1e-8, atol=1e-6
        )

    def test_parseval_per_frame(self):
        # full-spectrum energy: |X_0|^2 + 2*sum(|X_k|^2) + |X_N/2|^2
        # must equal n_fft * sum((w*frame)^2).
        rng = np.random.default_rng(3)
        cfg = SpectrogramConfig()
        clip = AudioClip(samples=rng.uniform(-1, 1, 4000), sample_rate=16000)
        frames = _windowed_frames(clip, cfg)
        power = stft_power(clip, cfg)
        for idx in (0, 3, 7):
            full = power[0, idx] + 2 * power[1:-1, idx].sum() + power[-1, idx]
            direct = cfg.n_fft * np.sum(frames[idx] ** 2)
            assert full == pytest.approx(direct, rel=1e-6)


class TestMelFilterbank:
    def test_shape(self):
        fb = mel_filterbank(SpectrogramConfig(), 16000)
        assert fb.shape == (64, 513)

    def test_nonnegative_every_row_hits_a_bin(self):
        fb = mel_filterbank(SpectrogramConfig(), 44100)
        assert np.all(fb >= 0)
        assert np.all((fb > 0).sum(axis=1) >= 1)

    def test_peak_centers_increase_on_mel_scale(self):
        cfg = SpectrogramConfig()
        fb = mel_filterbank(cfg, 16000)
        bin_hz = np.arange(513) * 16000 / 1024
        peaks_hz = bin_hz[fb.argmax(axis=1)]
        # oracle: nominal centers are the interior points of a uniform
        # grid on mel(f) = 2595*log10(1 + f/700)
        edges = np.linspace(hz_to_mel(0.0), hz_to_mel(8000.0), 66)
        assert np.all(np.diff(edges[1:-1]) > 0)
        assert np.all(np.diff(peaks_hz) >= 0)
        # each realized peak sits within one mel step of its nominal center
        np.testing.assert_allclose(
            hz_to_mel(peaks_hz), edges[1:-1], atol=float(edges[1] - edges[0])
        )

    def test_too_many_filters_rejected(self):
        with pytest.raises(ConfigError, match="filter"):
            mel_filterbank(SpectrogramConfig(n_fft=64, hop=64, n_mels=64), 16000)


class TestLogMel:
    def test_silence_hits_floor(self):
        clip = AudioClip(samples=np.zeros(16000), sample_rate=16000)
        spec = log_mel(clip)
        assert spec.data.shape == (64, 51)
        np.testing.assert_array_equal(spec.data, np.log(1e-10))

    def test_shape_formula(self):
        for n in (1, 320, 321, 16000, 44100):
            clip = AudioClip(samples=np.full(n, 0.1), sample_rate=16000)
            spec = log_mel(clip)
            assert spec.data.shape == (64, n // 320 + 1)

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        clip = AudioClip(samples=rng.uniform(-1, 1, 8000), sample_rate=16000)
        a = log_mel(clip)
        b = log_mel(clip)
        np.testing.assert_array_equal(a.data, b.data)

    def test_white_noise_rows_flat(self):
        # area normalization should give near-equal response to white noise
        # in every band; averaged over 100 trials, rows above 100 Hz agree
        # within 20%.
        rng = np.random.default_rng(5)
        cfg = SpectrogramConfig()
        acc = np.zeros(64)
        for _ in range(100):
            clip = AudioClip(samples=rng.uniform(-1, 1, 8000), sample_rate=16000)
            acc += np.exp(log_mel(clip, cfg).data).mean(axis=1)
        acc /= 100
        fb = mel_filterbank(cfg, 16000)
        centers = (np.arange(513) * 16000 / 1024)[fb.argmax(axis=1)]
        rows = acc[centers > 100.0]
        assert rows.max() / rows.min() < 1.2

    def test_invariants(self):
        rng = np.random.default_rng(6)
        clip = AudioClip(samples=rng.uniform(-0.1, 0.1, 3000), sample_rate=16000)
        spec = log_mel(clip)
        assert np.all(np.isfinite(spec.data))
        assert np.all(spec.data >= np.log(1e-10) - 1e-12)


class TestMelSpectrogramType:
    def test_rejects_empty(self):
        with pytest.raises(ConfigError):
            MelSpectrogram(data=np.zeros((0, 4)))

    def test_rejects_non_finite(self):
        with pytest.raises(ConfigError):
            MelSpectrogram(data=np.array([[np.inf, 0.0]]))
