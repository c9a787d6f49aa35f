"""Non-parametric pooling operators over the time axis of a spectrogram.

All five operators map an F x T matrix to F x floor(k*T), where the
compression factor k is the exact rational 1/m for an integer
denominator m >= 2. Windowed methods (max, avg, avgmax) use
non-overlapping windows of m frames and drop the trailing T mod m
frames. Uniform keeps every m-th frame starting at frame 0. Spectral
crops a centered window of per-row DFT coefficients and inverts, which
keeps the slow temporal structure instead of individual frames.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, InputTooShortError
from .features import MelSpectrogram

METHODS = ("max", "avg", "avgmax", "spectral", "uniform")


@dataclass(frozen=True)
class CompressionSpec:
    """Pooling method plus compression factor k = 1/denominator."""

    method: str
    denominator: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(
                f"unknown pooling method {self.method!r}; expected one of {METHODS}"
            )
        if not isinstance(self.denominator, int) or self.denominator < 2:
            raise ConfigError(
                f"denominator must be an integer >= 2, got {self.denominator!r}"
            )

    @property
    def k(self) -> float:
        return 1.0 / self.denominator

    @classmethod
    def parse(cls, text: str) -> "CompressionSpec":
        """Parse the textual form `method:denominator`, e.g. `spectral:2`."""
        parts = text.strip().lower().split(":")
        if len(parts) != 2:
            raise ConfigError(f"bad compression spec {text!r}; expected method:denominator")
        method, denom = parts
        try:
            denominator = int(denom)
        except ValueError:
            raise ConfigError(f"bad denominator in compression spec {text!r}") from None
        return cls(method=method, denominator=denominator)

    def __str__(self) -> str:
        return f"{self.method}:{self.denominator}"


@dataclass(frozen=True)
class CompressedSpectrogram:
    """F x T' result of pooling, T' = floor(T / denominator)."""

    data: np.ndarray
    spec: CompressionSpec
    original_frames: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ConfigError(f"compressed data must be 2-D non-empty, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ConfigError("compressed data contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def n_mels(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]


SpectrogramLike = Union[MelSpectrogram, CompressedSpectrogram, np.ndarray]


def _as_matrix(X: SpectrogramLike) -> np.ndarray:
    if isinstance(X, (MelSpectrogram, CompressedSpectrogram)):
        return X.data
    out = np.asarray(X, dtype=np.float64)
    if out.ndim != 2:
        raise ConfigError(f"expected a 2-D matrix, got shape {out.shape}")
    return out


def _check_length(T: int, m: int) -> int:
    out = T // m
    if out < 1:
        raise InputTooShortError(
            f"{T} frames pooled by 1/{m} would leave floor({T}/{m}) = {out} frames"
        )
    return out


def _windows(X: np.ndarray, m: int) -> np.ndarray:
    """Reshape to (F, T', m) non-overlapping windows, dropping the remainder."""
    F, T = X.shape
    T_out = _check_length(T, m)
    return X[:, : T_out * m].reshape(F, T_out, m)


def pool_max(X: SpectrogramLike, denominator: int) -> CompressedSpectrogram:
    """Max over each window of `denominator` consecutive frames."""
    mat = _as_matrix(X)
    out = _windows(mat, denominator).max(axis=2)
    return CompressedSpectrogram(out, CompressionSpec("max", denominator), mat.shape[1])


def pool_avg(X: SpectrogramLike, denominator: int) -> CompressedSpectrogram:
    """k-scaled window sum, i.e. the window mean."""
    mat = _as_matrix(X)
    out = _windows(mat, denominator).sum(axis=2) / denominator
    return CompressedSpectrogram(out, CompressionSpec("avg", denominator), mat.shape[1])


def pool_avg_max(X: SpectrogramLike, denominator: int) -> CompressedSpectrogram:
    """Elementwise sum of the max-pooled and avg-pooled outputs."""
    mat = _as_matrix(X)
    win = _windows(mat, denominator)
    out = win.max(axis=2) + win.sum(axis=2) / denominator
    return CompressedSpectrogram(out, CompressionSpec("avgmax", denominator), mat.shape[1])


def pool_uniform(X: SpectrogramLike, denominator: int) -> CompressedSpectrogram:
    """Every `denominator`-th frame starting at frame 0."""
    mat = _as_matrix(X)
    T_out = _check_length(mat.shape[1], denominator)
    out = mat[:, : T_out * denominator : denominator]
    return CompressedSpectrogram(
        out.copy(), CompressionSpec("uniform", denominator), mat.shape[1]
    )


def pool_spectral(X: SpectrogramLike, denominator: int) -> CompressedSpectrogram:
    """Centered DFT crop along time, inverted at the shorter length.

    Per row: forward DFT of length T, shift zero frequency to the
    center, keep the half-open window [c - T'//2, c - T'//2 + T') where
    c = T//2 is the centered zero-frequency index, inverse DFT of
    length T', take the real part, and scale by T'/T so that the DC
    amplitude (hence any constant row) is preserved exactly.
    """
    mat = _as_matrix(X)
    T = mat.shape[1]
    T_out = _check_length(T, denominator)

    spectrum = np.fft.fftshift(np.fft.fft(mat, axis=1), axes=1)
    start = T // 2 - T_out // 2
    cropped = spectrum[:, start : start + T_out]
    small = np.fft.ifft(np.fft.ifftshift(cropped, axes=1), axis=1)
    out = np.real(small) * (T_out / T)
    return CompressedSpectrogram(
        out, CompressionSpec("spectral", denominator), mat.shape[1]
    )


_POOLERS = {
    "max": pool_max,
    "avg": pool_avg,
    "avgmax": pool_avg_max,
    "spectral": pool_spectral,
    "uniform": pool_uniform,
}


def compress(X: SpectrogramLike, spec: CompressionSpec) -> CompressedSpectrogram:
    """Apply the pooling operator selected by `spec`."""
    return _POOLERS[spec.method](X, spec.denominator)
