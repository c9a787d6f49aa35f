"""Binary containers and CSV export for spectrograms and checkpoints.

All containers are little-endian. Layouts:

  mel spectrogram   b"SPFM" | u32 F | u32 T | F*T float64 (row-major)
  compressed        b"SPFC" | u8 method | u32 denominator | u32 original_frames
                    | u32 F | u32 T' | F*T' float64 (row-major)
  model checkpoint  b"SPFW" | u32 n_arrays | per array:
                    u32 ndim | ndim * u32 dims | float32 data (row-major)
"""
from __future__ import annotations

import struct
from typing import List, Union

import numpy as np

from .errors import ConfigError
from .features import MelSpectrogram
from .pooling import METHODS, CompressedSpectrogram, CompressionSpec

MEL_MAGIC = b"SPFM"
COMPRESSED_MAGIC = b"SPFC"
CHECKPOINT_MAGIC = b"SPFW"


def _pack_matrix(data: np.ndarray) -> bytes:
    F, T = data.shape
    return struct.pack("<II", F, T) + np.ascontiguousarray(data, dtype="<f8").tobytes()


def _unpack_matrix(buf: bytes, pos: int):
    F, T = struct.unpack_from("<II", buf, pos)
    pos += 8
    n = F * T * 8
    if len(buf) < pos + n:
        raise ConfigError("container truncated")
    data = np.frombuffer(buf, dtype="<f8", count=F * T, offset=pos).reshape(F, T)
    return data.copy(), pos + n


def write_mel(spec: MelSpectrogram) -> bytes:
    return MEL_MAGIC + _pack_matrix(spec.data)


def write_compressed(comp: CompressedSpectrogram) -> bytes:
    header = struct.pack(
        "<BII",
        METHODS.index(comp.spec.method),
        comp.spec.denominator,
        comp.original_frames,
    )
    return COMPRESSED_MAGIC + header + _pack_matrix(comp.data)


def read_spectrogram(buf: bytes) -> Union[MelSpectrogram, CompressedSpectrogram]:
    """Read either container; the magic selects the type."""
    if len(buf) < 4:
        raise ConfigError("container too small")
    magic = buf[:4]
    if magic == MEL_MAGIC:
        data, _ = _unpack_matrix(buf, 4)
        return MelSpectrogram(data=data)
    if magic == COMPRESSED_MAGIC:
        method_code, denominator, original = struct.unpack_from("<BII", buf, 4)
        if method_code >= len(METHODS):
            raise ConfigError(f"unknown method code {method_code}")
        data, _ = _unpack_matrix(buf, 13)
        return CompressedSpectrogram(
            data=data,
            spec=CompressionSpec(METHODS[method_code], denominator),
            original_frames=original,
        )
    raise ConfigError(f"unknown container magic {magic!r}")


def write_checkpoint(arrays: List[np.ndarray]) -> bytes:
    out = [CHECKPOINT_MAGIC, struct.pack("<I", len(arrays))]
    for a in arrays:
        a = np.asarray(a)
        out.append(struct.pack("<I", a.ndim))
        out.append(struct.pack(f"<{a.ndim}I", *a.shape))
        out.append(np.ascontiguousarray(a, dtype="<f4").tobytes())
    return b"".join(out)


def read_checkpoint(buf: bytes) -> List[np.ndarray]:
    if buf[:4] != CHECKPOINT_MAGIC:
        raise ConfigError(f"unknown checkpoint magic {buf[:4]!r}")
    (n_arrays,) = struct.unpack_from("<I", buf, 4)
    pos = 8
    arrays = []
    for _ in range(n_arrays):
        (ndim,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        shape = struct.unpack_from(f"<{ndim}I", buf, pos)
        pos += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        if len(buf) < pos + 4 * count:
            raise ConfigError("checkpoint truncated")
        data = np.frombuffer(buf, dtype="<f4", count=count, offset=pos)
        arrays.append(data.reshape(shape).astype(np.float32))
        pos += 4 * count
    return arrays


def to_csv(data: np.ndarray) -> str:
    """Plain CSV of a 2-D matrix, one spectrogram row per line."""
    lines = [",".join(repr(float(v)) for v in row) for row in np.asarray(data)]
    return "\n".join(lines) + "\n"
