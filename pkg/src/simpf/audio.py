"""WAV decoding and fixed-duration clip preparation.

Only the formats needed by the rest of the pipeline are supported:
RIFF/WAVE containers holding little-endian PCM16 or IEEE float32,
mono or stereo. Stereo is downmixed to mono by the per-sample channel
mean so that neither channel is privileged.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import AudioFormatError, UnsupportedCodecError

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

# PCM16 full-scale divisor; 1/32768 maps -32768..32767 into [-1, 1).
PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioClip:
    """Mono audio buffer with amplitudes in [-1, 1].

    samples: float64 array, length >= 1, all values finite.
    sample_rate: sampling frequency in Hz.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise AudioFormatError("clip must hold at least one sample")
        if not np.all(np.isfinite(samples)):
            raise AudioFormatError("clip contains non-finite samples")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise AudioFormatError("clip amplitudes must lie in [-1, 1]")
        if self.sample_rate <= 0:
            raise AudioFormatError(f"invalid sample rate {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return self.samples.size


def _parse_chunks(data: bytes):
    """Yield (chunk_id, payload) pairs from a RIFF body."""
    pos = 12  # past "RIFF<size>WAVE"
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        payload = data[pos + 8:pos + 8 + size]
        if len(payload) < size:
            raise AudioFormatError(f"chunk {cid!r} truncated")
        yield cid, payload
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def decode_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte string into a normalized mono clip.

    Accepts PCM 16-bit and IEEE float 32-bit, 1 or 2 channels. Stereo
    is downmixed by the arithmetic mean of the channels; integer PCM is
    scaled by 1/32768.
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError("not a RIFF/WAVE stream")

    fmt = None
    payload = None
    for cid, chunk in _parse_chunks(data):
        if cid == b"fmt ":
            if len(chunk) < 16:
                raise AudioFormatError("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", chunk, 0)
        elif cid == b"data":
            payload = chunk
    if fmt is None:
        raise AudioFormatError("missing fmt chunk")
    if payload is None:
        raise AudioFormatError("missing data chunk")

    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if audio_format == WAVE_FORMAT_EXTENSIBLE:
        raise UnsupportedCodecError("WAVE_FORMAT_EXTENSIBLE is not supported")
    if n_channels not in (1, 2):
        raise UnsupportedCodecError(f"{n_channels} channels not supported")

    if audio_format == WAVE_FORMAT_PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float64) / PCM16_SCALE
    elif audio_format == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4")
        # Float payloads may exceed full scale; clamp as part of normalization.
        samples = np.clip(raw.astype(np.float64), -1.0, 1.0)
    else:
        raise UnsupportedCodecError(
            f"format tag {audio_format:#06x} with {bits} bits not supported"
        )

    if n_channels == 2:
        samples = samples[: samples.size // 2 * 2].reshape(-1, 2).mean(axis=1)
    if samples.size == 0:
        raise AudioFormatError("data chunk holds no samples")
    return AudioClip(samples=samples, sample_rate=sample_rate)


def encode_wav(clip: AudioClip, pcm16: bool = True) -> bytes:
    """Encode a mono clip as RIFF/WAVE (PCM16 by default, else float32)."""
    if pcm16:
        scaled = np.clip(np.round(clip.samples * PCM16_SCALE), -32768, 32767)
        body = scaled.astype("<i2").tobytes()
        block, bits, tag = 2, 16, WAVE_FORMAT_PCM
    else:
        body = clip.samples.astype("<f4").tobytes()
        block, bits, tag = 4, 32, WAVE_FORMAT_IEEE_FLOAT
    fmt = struct.pack(
        "<HHIIHH", tag, 1, clip.sample_rate, clip.sample_rate * block, block, bits
    )
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    chunks += b"data" + struct.pack("<I", len(body)) + body
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


def pad_or_trim(clip: AudioClip, target_seconds: float) -> AudioClip:
    """Force a clip to round(target_seconds * sample_rate) samples.

    Shorter clips are right-padded with silence; longer clips keep their
    onset and are truncated from the end.
    """
    if target_seconds <= 0:
        raise ValueError("target_seconds must be positive")
    target = int(round(target_seconds * clip.sample_rate))
    n = clip.samples.size
    if n == target:
        return clip
    if n > target:
        samples = clip.samples[:target]
    else:
        samples = np.concatenate([clip.samples, np.zeros(target - n)])
    return AudioClip(samples=samples, sample_rate=clip.sample_rate)
