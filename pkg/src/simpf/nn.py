"""Desk-scale CNN classifier with hand-rolled gradients.

The model is deliberately small: 3x3 conv (1->8, same padding), ReLU,
2x2 max pool, 3x3 conv (8->16, same padding), ReLU, global average
pool, linear head. Training uses plain SGD on softmax cross-entropy.
Everything is numpy; float32 for training, float64 for gradient checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .audio import AudioClip
from .errors import InputTooShortError, ShapeError
from .features import MelSpectrogram, SpectrogramConfig, log_mel
from .pooling import CompressedSpectrogram, CompressionSpec, compress

# Minimum number of time frames the forward pass accepts. Mirrors the
# way strong compression can leave a clip too short for a real network.
MIN_FRAMES = 8

# Fixed affine conditioning applied to log-mel features before training
# and evaluation. Peak-normalized clips under the default front-end span
# roughly [ln(1e-10), 7]; these constants center and rescale that range.
INPUT_SHIFT = -16.5
INPUT_SCALE = 8.4

# Init gain for the classifier head. With global average pooling the
# head's scale sets how much gradient reaches the convolutions; plain
# He init leaves some seeds stuck in a no-texture basin at lr 1e-2.
LINEAR_INIT_GAIN = 4.0

PARAM_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "linear_w", "linear_b")


@dataclass
class TinyCnnModel:
    conv1_w: np.ndarray  # (8, 1, 3, 3)
    conv1_b: np.ndarray  # (8,)
    conv2_w: np.ndarray  # (16, 8, 3, 3)
    conv2_b: np.ndarray  # (16,)
    linear_w: np.ndarray  # (n_classes, 16)
    linear_b: np.ndarray  # (n_classes,)

    @classmethod
    def init(cls, n_classes: int = 4, seed: int = 0, dtype=np.float32) -> "TinyCnnModel":
        rng = np.random.default_rng(seed)

        def he(shape, fan_in):
            return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)

        return cls(
            conv1_w=he((8, 1, 3, 3), 9),
            conv1_b=np.zeros(8, dtype=dtype),
            conv2_w=he((16, 8, 3, 3), 72),
            conv2_b=np.zeros(16, dtype=dtype),
            linear_w=he((n_classes, 16), 16) * dtype(LINEAR_INIT_GAIN),
            linear_b=np.zeros(n_classes, dtype=dtype),
        )

    @property
    def n_classes(self) -> int:
        return self.linear_b.size

    def params(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def astype(self, dtype) -> "TinyCnnModel":
        return TinyCnnModel(**{k: v.astype(dtype) for k, v in self.params().items()})

    def copy(self) -> "TinyCnnModel":
        return TinyCnnModel(**{k: v.copy() for k, v in self.params().items()})

    def check_finite(self):
        for name, p in self.params().items():
            if not np.all(np.isfinite(p)):
                raise ShapeError(f"parameter {name} became non-finite")


# Activations are kept channels-last, (N, H, W, C). The 3x3 same-padding
# convolution is an im2col matmul; patches are gathered by stacking the
# nine shifted views on the last axis, which lands contiguous in the
# (c*9 + 3*i + j) order that the (O, C, 3, 3) weight layout flattens to.


def _im2col(x: np.ndarray) -> np.ndarray:
    n, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    shifts = [xp[:, i : i + h, j : j + w, :] for i in range(3) for j in range(3)]
    return np.stack(shifts, axis=-1).reshape(n * h * w, c * 9)


def _conv_same(x: np.ndarray, w: np.ndarray, b: np.ndarray, cols=None):
    n, h, width, _ = x.shape
    o = w.shape[0]
    if cols is None:
        cols = _im2col(x)
    out = cols @ w.reshape(o, -1).T + b
    return out.reshape(n, h, width, o), cols


def _conv_same_backward(cols, w, dout, need_dx=True):
    n, h, width, o = dout.shape
    c = w.shape[1]
    dout_flat = dout.reshape(n * h * width, o)
    dw = (dout_flat.T @ cols).reshape(w.shape)
    db = dout_flat.sum(axis=0)
    if not need_dx:
        return None, dw, db
    # Input gradient: full correlation of dout with the flipped kernel.
    w_flip = np.ascontiguousarray(w.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
    dx = _im2col(dout) @ w_flip.reshape(c, o * 9).T
    return dx.reshape(n, h, width, c), dw, db


def _maxpool2(x: np.ndarray):
    n, h, w, c = x.shape
    h2, w2 = h // 2, w // 2
    if h2 < 1 or w2 < 1:
        raise ShapeError(f"2x2 pool needs at least 2x2 input, got {h}x{w}")
    win = np.stack(
        [x[:, di : 2 * h2 : 2, dj : 2 * w2 : 2, :] for di in (0, 1) for dj in (0, 1)],
        axis=-1,
    )
    idx = win.argmax(axis=-1)
    return win.max(axis=-1), idx


def _maxpool2_backward(x_shape, idx, dout):
    n, h, w, c = x_shape
    h2, w2 = idx.shape[1], idx.shape[2]
    dwin = np.zeros(idx.shape + (4,), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    dx = np.zeros(x_shape, dtype=dout.dtype)
    for k, (di, dj) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        dx[:, di : 2 * h2 : 2, dj : 2 * w2 : 2, :] = dwin[..., k]
    return dx


def _forward_batch(model: TinyCnnModel, x: np.ndarray, want_cache: bool = False):
    """Logits for a channels-last (N, F, T, 1) batch; optionally keep the cache."""
    if x.ndim != 4:
        raise ShapeError(f"expected a (N, F, T, 1) input, got shape {x.shape}")
    if x.shape[2] < MIN_FRAMES:
        raise InputTooShortError(
            f"{x.shape[2]} frames < minimum {MIN_FRAMES}; "
            "the compressed clip is too short for this network"
        )
    a1, cols1 = _conv_same(x, model.conv1_w, model.conv1_b)
    r1 = np.maximum(a1, 0, out=a1)
    p1, pool_idx = _maxpool2(r1)
    a2, cols2 = _conv_same(p1, model.conv2_w, model.conv2_b)
    r2 = np.maximum(a2, 0, out=a2)
    g = r2.mean(axis=(1, 2))
    logits = g @ model.linear_w.T + model.linear_b
    if not want_cache:
        return logits, None
    return logits, {"cols1": cols1, "r1": r1, "pool_idx": pool_idx,
                    "cols2": cols2, "r2": r2, "g": g}


def forward(model: TinyCnnModel, X) -> np.ndarray:
    """Class logits (length n_classes) for one spectrogram."""
    mat = X.data if isinstance(X, (MelSpectrogram, CompressedSpectrogram)) else np.asarray(X)
    if mat.ndim != 2:
        raise ShapeError(f"expected a 2-D spectrogram, got shape {mat.shape}")
    dtype = model.conv1_w.dtype
    logits, _ = _forward_batch(model, mat.astype(dtype)[None, :, :, None], want_cache=False)
    return logits[0]


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grads(
    model: TinyCnnModel, inputs: np.ndarray, labels: np.ndarray, return_logits: bool = False
):
    """Mean softmax cross-entropy over the batch plus all parameter gradients.

    inputs: (N, F, T) array, labels: (N,) int class indices.
    """
    labels = np.asarray(labels)
    inputs = np.asarray(inputs)
    n = inputs.shape[0]
    if n < 1:
        raise ShapeError("batch must be non-empty")
    logits, cache = _forward_batch(model, inputs[..., None], want_cache=True)
    probs = _softmax(logits)
    eps = np.finfo(probs.dtype).tiny
    loss = float(-np.mean(np.log(probs[np.arange(n), labels] + eps)))

    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n

    grads: Dict[str, np.ndarray] = {}
    grads["linear_w"] = dlogits.T @ cache["g"]
    grads["linear_b"] = dlogits.sum(axis=0)
    dg = dlogits @ model.linear_w
    _, fh, fw, _ = cache["r2"].shape
    dr2 = np.broadcast_to(dg[:, None, None, :], cache["r2"].shape) / (fh * fw)
    da2 = dr2 * (cache["r2"] > 0)  # ReLU mask; r2 > 0 iff preactivation > 0
    dp1, grads["conv2_w"], grads["conv2_b"] = _conv_same_backward(
        cache["cols2"], model.conv2_w, da2
    )
    dr1 = _maxpool2_backward(cache["r1"].shape, cache["pool_idx"], dp1)
    da1 = dr1 * (cache["r1"] > 0)
    _, grads["conv1_w"], grads["conv1_b"] = _conv_same_backward(
        cache["cols1"], model.conv1_w, da1, need_dx=False
    )
    if return_logits:
        return loss, grads, logits
    return loss, grads


# ---------------------------------------------------------------------------
# Synthetic dataset: pure tone / up-chirp / noise burst / AM tone.
# ---------------------------------------------------------------------------

CLASS_NAMES = ("tone", "chirp", "noise_burst", "am_tone")


@dataclass(frozen=True)
class SynthDatasetSpec:
    n_classes: int = 4
    clips_per_class: int = 25
    clip_seconds: float = 1.0
    sample_rate: int = 16000
    seed: int = 0
    freq_jitter: float = 0.2  # multiplicative, +-20%

    def __post_init__(self):
        if not 2 <= self.n_classes <= len(CLASS_NAMES):
            raise ValueError(f"n_classes must be in [2, {len(CLASS_NAMES)}]")
        if self.clips_per_class < 1 or self.clip_seconds <= 0 or self.sample_rate < 1:
            raise ValueError("dataset spec fields must be positive")


def _jitter(rng, base: float, amount: float) -> float:
    return base * (1.0 + rng.uniform(-amount, amount))


def synth_dataset(spec: SynthDatasetSpec) -> List[Tuple[AudioClip, int]]:
    """Deterministic, class-balanced synthetic clips, peak-normalized to 0.9."""
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.clip_seconds * spec.sample_rate))
    t = np.arange(n) / spec.sample_rate
    duration = n / spec.sample_rate

    items: List[Tuple[AudioClip, int]] = []
    for label in range(spec.n_classes):
        name = CLASS_NAMES[label]
        for _ in range(spec.clips_per_class):
            phase = rng.uniform(0, 2 * np.pi)
            if name == "tone":
                f0 = _jitter(rng, 880.0, spec.freq_jitter)
                x = np.sin(2 * np.pi * f0 * t + phase)
            elif name == "chirp":
                # steep sweep so the ridge is clearly diagonal at the
                # network's receptive-field scale
                f0 = _jitter(rng, 300.0, spec.freq_jitter)
                f1 = _jitter(rng, 3000.0, spec.freq_jitter)
                x = np.sin(2 * np.pi * (f0 * t + (f1 - f0) * t**2 / (2 * duration)) + phase)
            elif name == "noise_burst":
                x = np.zeros(n)
                width = rng.uniform(0.3, 0.7)
                start = rng.uniform(0, 1.0 - width)
                i0, i1 = int(start * n), int((start + width) * n)
                burst = rng.standard_normal(max(i1 - i0, 8))
                env = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(burst.size) / burst.size)
                x[i0 : i0 + burst.size] = burst * env
            else:  # am_tone
                carrier = _jitter(rng, 1760.0, spec.freq_jitter)
                # 10-16 Hz modulation: a 3-5 frame on/off texture at the
                # default 50 frames/s, visible to 3x3 kernels
                rate = rng.uniform(10.0, 16.0)
                depth = 0.97
                env = (1 - depth) + depth * 0.5 * (1 + np.sin(2 * np.pi * rate * t))
                x = env * np.sin(2 * np.pi * carrier * t + phase)
            x = 0.9 * x / np.max(np.abs(x))
            items.append((AudioClip(samples=x, sample_rate=spec.sample_rate), label))
    return items


# ---------------------------------------------------------------------------
# Training.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    batch_size: int = 16
    epochs: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("train config fields must be non-negative/positive")


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_acc: float
    test_acc: Optional[float] = None


def prepare_inputs(
    dataset: Sequence[Tuple[AudioClip, int]],
    frontend: Optional[CompressionSpec] = None,
    feature_config: SpectrogramConfig = SpectrogramConfig(),
    dtype=np.float32,
) -> Tuple[np.ndarray, np.ndarray]:
    """log_mel (+ optional pooling + fixed conditioning) for every clip.

    Returns (inputs, labels) with inputs shaped (N, F, T). All clips
    must produce the same spectrogram shape.
    """
    if not dataset:
        raise ShapeError("dataset must be non-empty")
    mats = []
    labels = []
    for idx, (clip, label) in enumerate(dataset):
        try:
            feat = log_mel(clip, feature_config)
            mat = compress(feat, frontend).data if frontend else feat.data
        except InputTooShortError as exc:
            raise InputTooShortError(f"clip {idx}: {exc}") from exc
        mats.append(((mat - INPUT_SHIFT) / INPUT_SCALE).astype(dtype))
        labels.append(label)
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise ShapeError(f"clips produce mixed spectrogram shapes: {sorted(shapes)}")
    return np.stack(mats), np.asarray(labels, dtype=np.int64)


def _accuracy_from_inputs(model: TinyCnnModel, inputs, labels, batch_size=256) -> float:
    hits = 0
    for i in range(0, inputs.shape[0], batch_size):
        logits, _ = _forward_batch(model, inputs[i : i + batch_size, ..., None])
        hits += int((logits.argmax(axis=1) == labels[i : i + batch_size]).sum())
    return hits / inputs.shape[0]


def train(
    model: TinyCnnModel,
    dataset: Sequence[Tuple[AudioClip, int]],
    frontend: Optional[CompressionSpec] = None,
    cfg: TrainConfig = TrainConfig(),
    eval_dataset: Optional[Sequence[Tuple[AudioClip, int]]] = None,
) -> Tuple[TinyCnnModel, List[EpochStats]]:
    """SGD training; returns the trained model and per-epoch history."""
    inputs, labels = prepare_inputs(dataset, frontend)
    eval_pack = prepare_inputs(eval_dataset, frontend) if eval_dataset else None

    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    n = inputs.shape[0]
    history: List[EpochStats] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        hits = 0
        for i in range(0, n, cfg.batch_size):
            sel = order[i : i + cfg.batch_size]
            loss, grads, logits = loss_and_grads(
                model, inputs[sel], labels[sel], return_logits=True
            )
            loss_sum += loss * sel.size
            hits += int((logits.argmax(axis=1) == labels[sel]).sum())
            for name, g in grads.items():
                p = getattr(model, name)
                p -= (cfg.learning_rate * g).astype(p.dtype)
        model.check_finite()
        # train_acc is the running accuracy over the epoch's pre-update batches.
        stats = EpochStats(
            epoch=epoch,
            loss=loss_sum / n,
            train_acc=hits / n,
            test_acc=(
                _accuracy_from_inputs(model, *eval_pack) if eval_pack else None
            ),
        )
        history.append(stats)
    return model, history


def evaluate(
    model: TinyCnnModel,
    dataset: Sequence[Tuple[AudioClip, int]],
    frontend: Optional[CompressionSpec] = None,
) -> float:
    """Fraction of argmax-correct predictions on the dataset."""
    inputs, labels = prepare_inputs(dataset, frontend)
    return _accuracy_from_inputs(model, inputs, labels)


def history_to_csv(history: Sequence[EpochStats]) -> str:
    lines = ["epoch,loss,train_acc,test_acc"]
    for row in history:
        test = "" if row.test_acc is None else repr(row.test_acc)
        lines.append(f"{row.epoch},{row.loss!r},{row.train_acc!r},{test}")
    return "\n".join(lines) + "\n"


def save_checkpoint(model: TinyCnnModel) -> bytes:
    from .container import write_checkpoint

    return write_checkpoint([model.params()[name] for name in PARAM_NAMES])


def load_checkpoint(buf: bytes) -> TinyCnnModel:
    from .container import read_checkpoint

    arrays = read_checkpoint(buf)
    if len(arrays) != len(PARAM_NAMES):
        raise ShapeError(f"checkpoint holds {len(arrays)} arrays, expected {len(PARAM_NAMES)}")
    return TinyCnnModel(**dict(zip(PARAM_NAMES, arrays)))
