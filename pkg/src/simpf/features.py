"""Log-mel spectrogram front-end.

The pipeline is: periodic Hann window -> center-padded STFT power
spectrum -> triangular mel filterbank -> natural log with a small
floor. Defaults follow the common audio-tagging setup: 1024-sample
window, 320-sample hop, 64 mel bins.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audio import AudioClip
from .errors import ConfigError, InputTooShortError

MEL_SCALE = 2595.0
MEL_BREAK_HZ = 700.0

# Filterbanks are pure functions of (config, sample_rate); memoized since
# batch feature extraction rebuilds the same bank for every clip.
_FILTERBANK_CACHE: dict = {}


@dataclass(frozen=True)
class SpectrogramConfig:
    """STFT and mel filterbank parameters.

    f_max=None means the Nyquist frequency of the clip being analyzed.
    mel_norm selects filter normalization: "area" divides each triangle
    by its bandwidth in Hz (flat response to white noise), "none" keeps
    unit peaks.
    """

    n_fft: int = 1024
    hop: int = 320
    n_mels: int = 64
    f_min: float = 0.0
    f_max: Optional[float] = None
    log_floor: float = 1e-10
    mel_norm: str = "area"

    def __post_init__(self):
        if self.n_fft < 1 or (self.n_fft & (self.n_fft - 1)) != 0:
            raise ConfigError(f"n_fft must be a power of two, got {self.n_fft}")
        if not 0 < self.hop <= self.n_fft:
            raise ConfigError(f"hop must satisfy 0 < hop <= n_fft, got {self.hop}")
        if self.n_mels < 1:
            raise ConfigError(f"n_mels must be positive, got {self.n_mels}")
        if self.f_min < 0:
            raise ConfigError(f"f_min must be non-negative, got {self.f_min}")
        if self.log_floor <= 0:
            raise ConfigError(f"log_floor must be positive, got {self.log_floor}")
        if self.mel_norm not in ("area", "none"):
            raise ConfigError(f"unknown mel_norm {self.mel_norm!r}")

    def effective_f_max(self, sample_rate: int) -> float:
        nyquist = sample_rate / 2.0
        f_max = nyquist if self.f_max is None else self.f_max
        if not self.f_min < f_max <= nyquist:
            raise ConfigError(
                f"need f_min < f_max <= sample_rate/2, got "
                f"[{self.f_min}, {f_max}] at {sample_rate} Hz"
            )
        return f_max


@dataclass(frozen=True)
class MelSpectrogram:
    """F x T matrix of natural-log mel power values.

    Every entry is finite and >= ln(log_floor). config records how the
    matrix was produced (None when loaded from a bare container).
    """

    data: np.ndarray
    config: Optional[SpectrogramConfig] = None
    sample_rate: Optional[int] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ConfigError(f"spectrogram must be 2-D and non-empty, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ConfigError("spectrogram contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def n_mels(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window: w[i] = 0.5 - 0.5*cos(2*pi*i/n)."""
    if n < 1:
        raise ValueError("window length must be >= 1")
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def hz_to_mel(f):
    return MEL_SCALE * np.log10(1.0 + np.asarray(f, dtype=np.float64) / MEL_BREAK_HZ)


def mel_to_hz(m):
    return MEL_BREAK_HZ * (10.0 ** (np.asarray(m, dtype=np.float64) / MEL_SCALE) - 1.0)


def _windowed_frames(clip: AudioClip, cfg: SpectrogramConfig) -> np.ndarray:
    """Slice a clip into T x n_fft windowed frames with reflect center padding."""
    x = clip.samples
    if x.size < 1:
        raise InputTooShortError("clip must hold at least one sample")
    pad = cfg.n_fft // 2
    if x.size == 1:
        padded = np.full(x.size + 2 * pad, x[0])  # reflection of a point is constant
    else:
        padded = np.pad(x, pad, mode="reflect")
    n_frames = x.size // cfg.hop + 1
    idx = np.arange(cfg.n_fft)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    return padded[idx] * hann_window(cfg.n_fft)[None, :]


def stft_power(clip: AudioClip, cfg: SpectrogramConfig) -> np.ndarray:
    """One-sided STFT power spectrum, shape (n_fft/2 + 1, T).

    Frames are centered (reflect padding of n_fft/2 per side), so
    T = floor(len(clip) / hop) + 1.
    """
    frames = _windowed_frames(clip, cfg)
    spectrum = np.fft.rfft(frames, n=cfg.n_fft, axis=1)
    return (spectrum.real ** 2 + spectrum.imag ** 2).T


def mel_filterbank(cfg: SpectrogramConfig, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft/2 + 1).

    Peaks are equally spaced on the mel scale between f_min and f_max.
    Raises ConfigError when n_mels is too large for the FFT resolution
    (some filter would cover no bin).
    """
    cached = _FILTERBANK_CACHE.get((cfg, sample_rate))
    if cached is not None:
        return cached
    f_max = cfg.effective_f_max(sample_rate)
    n_bins = cfg.n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * sample_rate / cfg.n_fft

    mel_edges = np.linspace(hz_to_mel(cfg.f_min), hz_to_mel(f_max), cfg.n_mels + 2)
    hz_edges = mel_to_hz(mel_edges)

    fb = np.zeros((cfg.n_mels, n_bins))
    for i in range(cfg.n_mels):
        left, center, right = hz_edges[i], hz_edges[i + 1], hz_edges[i + 2]
        up = (bin_hz - left) / (center - left)
        down = (right - bin_hz) / (right - center)
        fb[i] = np.maximum(0.0, np.minimum(up, down))
        if not fb[i].any():
            raise ConfigError(
                f"mel filter {i} spans no FFT bin; reduce n_mels or raise n_fft"
            )
        if cfg.mel_norm == "area":
            fb[i] /= right - left
    fb.setflags(write=False)
    if len(_FILTERBANK_CACHE) > 32:
        _FILTERBANK_CACHE.clear()
    _FILTERBANK_CACHE[(cfg, sample_rate)] = fb
    return fb


def log_mel(clip: AudioClip, cfg: SpectrogramConfig = SpectrogramConfig()) -> MelSpectrogram:
    """Natural-log mel spectrogram: ln(max(filterbank @ power, log_floor))."""
    power = stft_power(clip, cfg)
    fb = mel_filterbank(cfg, clip.sample_rate)
    data = np.log(np.maximum(fb @ power, cfg.log_floor))
    return MelSpectrogram(data=data, config=cfg, sample_rate=clip.sample_rate)
