"""Integer FLOPs cost model for small CNN stacks on spectrogram input.

Counting convention (stated in every report): a multiply-accumulate is
2 FLOPs; BatchNorm costs 2 per element (scale + shift, bias adds folded
in); activations and pooling cost 1 per input element. All counts are
exact integers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .errors import ConfigError, ShapeError

KINDS = (
    "Conv2d",
    "DepthwiseConv2d",
    "Linear",
    "BatchNorm",
    "Activation",
    "Pool2d",
    "GlobalPool",
)

CONVENTION = (
    "multiply-accumulate = 2 FLOPs; BatchNorm = 2 FLOPs/element; "
    "activation and pooling = 1 FLOP/element; bias adds folded into "
    "BatchNorm/activation terms"
)

Geometry = Tuple[int, int, int]  # (channels, height, width)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    kernel: Tuple[int, int] = (1, 1)
    in_channels: int = 1
    out_channels: int = 1
    stride: Tuple[int, int] = (1, 1)
    padding: str = "same"  # "same" or "valid"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if min(self.kernel) < 1 or min(self.stride) < 1:
            raise ConfigError(f"kernel/stride must be positive in {self}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ConfigError(f"channel counts must be positive in {self}")
        if self.kind == "DepthwiseConv2d" and self.in_channels != self.out_channels:
            raise ConfigError("depthwise conv requires in_channels == out_channels")
        if self.padding not in ("same", "valid"):
            raise ConfigError(f"unknown padding mode {self.padding!r}")


@dataclass(frozen=True)
class ArchSpec:
    name: str
    layers: Tuple[LayerSpec, ...]
    n_mels: int = 64

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.n_mels < 1:
            raise ConfigError("n_mels must be positive")
        channels = 1
        for i, layer in enumerate(self.layers):
            if layer.in_channels != channels:
                raise ConfigError(
                    f"{self.name}: layer {i} ({layer.kind}) expects "
                    f"{layer.in_channels} channels but receives {channels}"
                )
            channels = layer.out_channels


@dataclass(frozen=True)
class LayerFlops:
    index: int
    kind: str
    flops: int
    out_geometry: Geometry


@dataclass(frozen=True)
class FlopsReport:
    arch_name: str
    input_geometry: Geometry
    per_layer: Tuple[LayerFlops, ...]
    convention: str = CONVENTION

    @property
    def total(self) -> int:
        return sum(row.flops for row in self.per_layer)


def _conv_output(h: int, w: int, layer: LayerSpec) -> Tuple[int, int]:
    kh, kw = layer.kernel
    sh, sw = layer.stride
    if layer.padding == "same":
        out_h = -(-h // sh)
        out_w = -(-w // sw)
    else:
        if h < kh or w < kw:
            raise ShapeError(
                f"valid {layer.kind} kernel {layer.kernel} does not fit input {h}x{w}"
            )
        out_h = (h - kh) // sh + 1
        out_w = (w - kw) // sw + 1
    return out_h, out_w


def layer_flops(layer: LayerSpec, geometry: Geometry) -> Tuple[int, Geometry]:
    """FLOPs of one layer on `geometry`, plus the output geometry."""
    c, h, w = geometry
    if min(geometry) < 1:
        raise ShapeError(f"degenerate input geometry {geometry}")
    if layer.kind in ("Conv2d", "DepthwiseConv2d") and layer.in_channels != c:
        raise ShapeError(f"{layer.kind} expects {layer.in_channels} channels, got {c}")

    kh, kw = layer.kernel
    if layer.kind == "Conv2d":
        out_h, out_w = _conv_output(h, w, layer)
        count = 2 * kh * kw * layer.in_channels * layer.out_channels * out_h * out_w
        return count, (layer.out_channels, out_h, out_w)
    if layer.kind == "DepthwiseConv2d":
        out_h, out_w = _conv_output(h, w, layer)
        count = 2 * kh * kw * layer.in_channels * out_h * out_w
        return count, (layer.out_channels, out_h, out_w)
    if layer.kind == "Linear":
        if (h, w) != (1, 1):
            raise ShapeError("Linear expects pooled 1x1 geometry; add GlobalPool first")
        if layer.in_channels != c:
            raise ShapeError(f"Linear expects {layer.in_channels} features, got {c}")
        return 2 * layer.in_channels * layer.out_channels, (layer.out_channels, 1, 1)
    if layer.kind == "BatchNorm":
        return 2 * c * h * w, geometry
    if layer.kind == "Activation":
        return c * h * w, geometry
    if layer.kind == "Pool2d":
        sh, sw = layer.stride
        if h < kh or w < kw:
            raise ShapeError(f"pool kernel {layer.kernel} does not fit input {h}x{w}")
        out_h = (h - kh) // sh + 1
        out_w = (w - kw) // sw + 1
        return c * h * w, (c, out_h, out_w)
    if layer.kind == "GlobalPool":
        return c * h * w, (c, 1, 1)
    raise ConfigError(f"unknown layer kind {layer.kind!r}")


def model_flops(arch: ArchSpec, n_frames: int) -> FlopsReport:
    """Fold layer_flops over the arch at input geometry (1, n_mels, n_frames)."""
    if n_frames < 1:
        raise ShapeError(f"n_frames must be >= 1, got {n_frames}")
    geometry: Geometry = (1, arch.n_mels, n_frames)
    rows = []
    current = geometry
    for i, layer in enumerate(arch.layers):
        count, current = layer_flops(layer, current)
        rows.append(LayerFlops(index=i, kind=layer.kind, flops=count, out_geometry=current))
    return FlopsReport(arch_name=arch.name, input_geometry=geometry, per_layer=tuple(rows))


@dataclass(frozen=True)
class CompareRow:
    label: str
    n_frames: int
    flops: int
    ratio: float


def compare_report(arch: ArchSpec, n_frames: int, specs: Sequence) -> List[CompareRow]:
    """Baseline row plus one row per compression spec, with FLOPs ratios."""
    baseline = model_flops(arch, n_frames).total
    rows = [CompareRow("baseline", n_frames, baseline, 1.0)]
    for spec in specs:
        frames = n_frames // spec.denominator
        if frames < 1:
            raise ShapeError(
                f"{spec}: floor({n_frames}/{spec.denominator}) leaves no frames"
            )
        total = model_flops(arch, frames).total
        rows.append(CompareRow(str(spec), frames, total, total / baseline))
    return rows


# ---------------------------------------------------------------------------
# Arch text format: one layer per line,
#   kind k_h k_w c_in c_out stride_h stride_w
# with '#' comments. Convolutions parsed from files use same padding.
# ---------------------------------------------------------------------------

def parse_arch_text(text: str, name: str = "arch", n_mels: int = 64) -> ArchSpec:
    layers = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 7:
            raise ConfigError(
                f"{name}:{lineno}: expected 7 fields "
                f"(kind k_h k_w c_in c_out stride_h stride_w), got {len(parts)}"
            )
        kind = {k.lower(): k for k in KINDS}.get(parts[0].lower())
        if kind is None:
            raise ConfigError(f"{name}:{lineno}: unknown layer kind {parts[0]!r}")
        try:
            kh, kw, cin, cout, sh, sw = (int(p) for p in parts[1:])
        except ValueError:
            raise ConfigError(f"{name}:{lineno}: non-integer field in {line!r}") from None
        layers.append(
            LayerSpec(kind=kind, kernel=(kh, kw), in_channels=cin,
                      out_channels=cout, stride=(sh, sw))
        )
    if not layers:
        raise ConfigError(f"{name}: no layers found")
    return ArchSpec(name=name, layers=tuple(layers), n_mels=n_mels)


def format_arch_text(arch: ArchSpec) -> str:
    lines = [f"# {arch.name}"]
    for layer in arch.layers:
        lines.append(
            f"{layer.kind} {layer.kernel[0]} {layer.kernel[1]} "
            f"{layer.in_channels} {layer.out_channels} "
            f"{layer.stride[0]} {layer.stride[1]}"
        )
    return "\n".join(lines) + "\n"


def load_arch(path, n_mels: int = 64) -> ArchSpec:
    from pathlib import Path

    p = Path(path)
    return parse_arch_text(p.read_text(), name=p.stem, n_mels=n_mels)


def _conv_block(cin: int, cout: int, pool: Tuple[int, int]) -> List[LayerSpec]:
    return [
        LayerSpec("Conv2d", (3, 3), cin, cout),
        LayerSpec("BatchNorm", (1, 1), cout, cout),
        LayerSpec("Activation", (1, 1), cout, cout),
        LayerSpec("Pool2d", pool, cout, cout, stride=pool),
    ]


def cnn10_like(n_classes: int = 10, n_mels: int = 64) -> ArchSpec:
    """Four conv blocks, channels 64 to 512.

    The first pool halves only the frequency axis so the stack stays
    conv-dominated and close to linear in the input frame count.
    """
    layers = (
        _conv_block(1, 64, (2, 1))
        + _conv_block(64, 128, (2, 2))
        + _conv_block(128, 256, (2, 2))
        + _conv_block(256, 512, (2, 2))
        + [
            LayerSpec("GlobalPool", (1, 1), 512, 512),
            LayerSpec("Linear", (1, 1), 512, 512),
            LayerSpec("Activation", (1, 1), 512, 512),
            LayerSpec("Linear", (1, 1), 512, n_classes),
        ]
    )
    return ArchSpec(name="cnn10_like", layers=tuple(layers), n_mels=n_mels)


def cnn14_like(n_classes: int = 10, n_mels: int = 64) -> ArchSpec:
    """Six conv blocks, channels 64 to 2048."""
    layers = (
        _conv_block(1, 64, (2, 1))
        + _conv_block(64, 128, (2, 2))
        + _conv_block(128, 256, (2, 2))
        + _conv_block(256, 512, (2, 2))
        + _conv_block(512, 1024, (2, 2))
        + _conv_block(1024, 2048, (2, 2))
        + [
            LayerSpec("GlobalPool", (1, 1), 2048, 2048),
            LayerSpec("Linear", (1, 1), 2048, 2048),
            LayerSpec("Activation", (1, 1), 2048, 2048),
            LayerSpec("Linear", (1, 1), 2048, n_classes),
        ]
    )
    return ArchSpec(name="cnn14_like", layers=tuple(layers), n_mels=n_mels)


def tiny_cnn_arch(n_classes: int = 4, n_mels: int = 64) -> ArchSpec:
    """Cost-model mirror of the trainable TinyCnnModel in simpf.nn."""
    layers = (
        LayerSpec("Conv2d", (3, 3), 1, 8),
        LayerSpec("Activation", (1, 1), 8, 8),
        LayerSpec("Pool2d", (2, 2), 8, 8, stride=(2, 2)),
        LayerSpec("Conv2d", (3, 3), 8, 16),
        LayerSpec("Activation", (1, 1), 16, 16),
        LayerSpec("GlobalPool", (1, 1), 16, 16),
        LayerSpec("Linear", (1, 1), 16, n_classes),
    )
    return ArchSpec(name="tiny_cnn", layers=layers, n_mels=n_mels)
