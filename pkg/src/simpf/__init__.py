"""Pooling front-ends for mel-spectrograms.

Library surface: WAV decoding (`audio`), log-mel features (`features`),
time-axis pooling operators (`pooling`), an integer FLOPs cost model
(`flops`), and a small trainable CNN with a synthetic dataset (`nn`).
"""

__version__ = "0.1.0"

from .audio import AudioClip, decode_wav, encode_wav, pad_or_trim
from .errors import (
    AudioFormatError,
    ConfigError,
    InputTooShortError,
    ShapeError,
    SimpfError,
    UnsupportedCodecError,
)
from .features import (
    MelSpectrogram,
    SpectrogramConfig,
    hann_window,
    log_mel,
    mel_filterbank,
    stft_power,
)
from .pooling import (
    CompressedSpectrogram,
    CompressionSpec,
    compress,
    pool_avg,
    pool_avg_max,
    pool_max,
    pool_spectral,
    pool_uniform,
)

__all__ = [
    "AudioClip",
    "AudioFormatError",
    "CompressedSpectrogram",
    "CompressionSpec",
    "ConfigError",
    "InputTooShortError",
    "MelSpectrogram",
    "ShapeError",
    "SimpfError",
    "SpectrogramConfig",
    "UnsupportedCodecError",
    "compress",
    "decode_wav",
    "encode_wav",
    "hann_window",
    "log_mel",
    "mel_filterbank",
    "pad_or_trim",
    "pool_avg",
    "pool_avg_max",
    "pool_max",
    "pool_spectral",
    "pool_uniform",
    "stft_power",
    "__version__",
]
