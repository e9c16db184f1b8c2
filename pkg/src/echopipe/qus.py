"""Quantitative-ultrasound hooks: sliding-window envelope moments and a
loadable fully-connected network mapping moments to homodyned-K parameter
estimates (inference only; the two outputs are treated as opaque regression
values).

Model file layout (documented contract):

    line 1:            ``HKDM 1`` (magic, format version)
    line 2:            ``layers <count>``
    next <count> lines ``<in_width> <out_width> <activation>``
                       activation in {relu, identity, softplus}
    final line:        ``end``
    binary payload:    for each layer, weight matrix row-major
                       (out_width x in_width) then bias vector (out_width),
                       all little-endian float64

The header is ASCII, newline-terminated; the payload begins immediately
after the ``end`` line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, FormatError, InvalidMetadata, WindowTooLarge

MODEL_MAGIC = "HKDM"
MODEL_VERSION = 1
ACTIVATIONS = ("relu", "identity", "softplus")

# moment means can dip a hair below the exact m2 >= m1^2 bound in floating
# point; tolerate that much and no more
_MOMENT_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class MomentMaps:
    """Raw moment maps E[X], E[X^2], E[X^3] over a sliding-window grid."""

    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    window: tuple[int, int]
    stride: tuple[int, int]

    def __post_init__(self):
        if not (self.m1.shape == self.m2.shape == self.m3.shape):
            raise DimensionMismatch(0, "moment maps must share one shape")
        if self.m2.size and self.m2.min() < 0:
            raise InvalidMetadata("m2", "second moment must be >= 0")
        scale = np.maximum(np.abs(self.m2), 1.0)
        if self.m2.size and np.any(self.m2 - self.m1**2 < -_MOMENT_SLACK * scale):
            raise InvalidMetadata("m2", "variance m2 - m1^2 must be >= 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.m1.shape

    def stacked(self) -> np.ndarray:
        """Moments as a (rows, cols, 3) tensor ordered (m1, m2, m3)."""
        return np.stack([self.m1, self.m2, self.m3], axis=-1)


@dataclass(frozen=True, eq=False)
class DenseLayer:
    weights: np.ndarray  # (out_width, in_width)
    bias: np.ndarray  # (out_width,)
    activation: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise DimensionMismatch(0, "layer weights/bias shapes disagree")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise InvalidMetadata("weights", "non-finite parameter")
        if self.activation not in ACTIVATIONS:
            raise InvalidMetadata("activation", f"must be one of {ACTIVATIONS}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True, eq=False)
class DenseModel:
    """Fully connected stack: 3 moment inputs -> 2 parameter outputs."""

    layers: tuple[DenseLayer, ...]

    def __post_init__(self):
        if not self.layers:
            raise InvalidMetadata("layers", "model needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.layers[0].weights.shape[1] != 3:
            raise DimensionMismatch(0, "model input width must be 3")
        if self.layers[-1].weights.shape[0] != 2:
            raise DimensionMismatch(0, "model output width must be 2")
        for i in range(1, len(self.layers)):
            need = self.layers[i - 1].weights.shape[0]
            got = self.layers[i].weights.shape[1]
            if need != got:
                raise DimensionMismatch(i, f"layer {i} expects {got}, gets {need}")


@dataclass(frozen=True, eq=False)
class HkParamsMap:
    """Per-window homodyned-K parameter estimates (u, k) on the window grid."""

    u: np.ndarray
    k: np.ndarray
    window: tuple[int, int]
    stride: tuple[int, int]

    def __post_init__(self):
        if self.u.shape != self.k.shape:
            raise DimensionMismatch(0, "u and k maps must share one shape")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.k))):
            raise InvalidMetadata("u", "non-finite estimate")


def sliding_moments(
    env_img: np.ndarray,
    window: tuple[int, int],
    stride: tuple[int, int] = (1, 1),
) -> MomentMaps:
    """Arithmetic means of X, X^2, X^3 over every window placement.

    Output grid dims are ``floor((dim - win) / stride) + 1`` per axis.
    """
    img = np.asarray(env_img, dtype=np.float64)
    wh, ww = int(window[0]), int(window[1])
    sh, sw = int(stride[0]), int(stride[1])
    if img.ndim != 2:
        raise DimensionMismatch(img.ndim, "moments expect a 2-D image")
    if sh < 1 or sw < 1:
        raise InvalidMetadata("stride", "strides must be >= 1")
    if wh < 1 or ww < 1:
        raise InvalidMetadata("window", "window dims must be >= 1")
    if wh > img.shape[0] or ww > img.shape[1]:
        raise WindowTooLarge(
            f"window {wh}x{ww} exceeds image {img.shape[0]}x{img.shape[1]}"
        )

    def mean_map(a):
        views = np.lib.stride_tricks.sliding_window_view(a, (wh, ww))
        return views[::sh, ::sw].mean(axis=(-2, -1))

    return MomentMaps(
        m1=mean_map(img),
        m2=mean_map(img**2),
        m3=mean_map(img**3),
        window=(wh, ww),
        stride=(sh, sw),
    )


def _apply_activation(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "softplus":
        return np.logaddexp(0.0, z)
    return z


def dense_forward(x: np.ndarray, model: DenseModel) -> np.ndarray:
    """Affine-then-activation composition over the layer stack.

    Accepts a single 3-vector or a batch shaped (..., 3); returns outputs
    shaped (..., 2) (a plain 2-vector for a single input).
    """
    a = np.asarray(x, dtype=np.float64)
    if a.shape[-1] != model.layers[0].weights.shape[1]:
        raise DimensionMismatch(0, f"input width must be {model.layers[0].weights.shape[1]}")
    for layer in model.layers:
        a = a @ layer.weights.T + layer.bias
        a = _apply_activation(a, layer.activation)
    return a


def estimate_hk_map(
    env_img: np.ndarray,
    window: tuple[int, int],
    stride: tuple[int, int],
    model: DenseModel,
) -> HkParamsMap:
    """Per-window (u, k): the dense model applied to each window's moments."""
    moments = sliding_moments(env_img, window, stride)
    out = dense_forward(moments.stacked(), model)
    return HkParamsMap(
        u=out[..., 0], k=out[..., 1], window=moments.window, stride=moments.stride
    )


def save_model(model: DenseModel, path) -> None:
    """Write a model in the documented header + little-endian f64 layout."""
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}", f"layers {len(model.layers)}"]
    for layer in model.layers:
        out_w, in_w = layer.weights.shape
        lines.append(f"{in_w} {out_w} {layer.activation}")
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for layer in model.layers:
            fh.write(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def load_model(path) -> DenseModel:
    """Read a model file; raises FormatError on any structural defect."""
    with open(path, "rb") as fh:
        blob = fh.read()

    def fail(offset, reason):
        raise FormatError(offset, reason)

    pos = 0

    def read_line():
        nonlocal pos
        end = blob.find(b"\n", pos)
        if end < 0:
            fail(pos, "truncated header")
        line = blob[pos:end].decode("ascii", errors="replace")
        pos = end + 1
        return line

    head = read_line().split()
    if len(head) != 2 or head[0] != MODEL_MAGIC:
        fail(0, "bad magic")
    if head[1] != str(MODEL_VERSION):
        fail(0, f"unsupported version {head[1]}")
    layer_line = read_line().split()
    if len(layer_line) != 2 or layer_line[0] != "layers":
        fail(pos, "expected 'layers <count>'")
    try:
        n_layers = int(layer_line[1])
    except ValueError:
        fail(pos, "layer count not an integer")
    if n_layers < 1:
        fail(pos, "layer count must be >= 1")
    dims = []
    for _ in range(n_layers):
        parts = read_line().split()
        if len(parts) != 3:
            fail(pos, "expected '<in> <out> <activation>'")
        try:
            in_w, out_w = int(parts[0]), int(parts[1])
        except ValueError:
            fail(pos, "layer dims not integers")
        if in_w < 1 or out_w < 1:
            fail(pos, "layer dims must be >= 1")
        if parts[2] not in ACTIVATIONS:
            fail(pos, f"unknown activation {parts[2]!r}")
        dims.append((in_w, out_w, parts[2]))
    if read_line() != "end":
        fail(pos, "expected 'end'")

    layers = []
    for in_w, out_w, act in dims:
        w_bytes = out_w * in_w * 8
        b_bytes = out_w * 8
        if pos + w_bytes + b_bytes > len(blob):
            fail(len(blob), "truncated parameter payload")
        w = np.frombuffer(blob, dtype="<f8", count=out_w * in_w, offset=pos)
        pos += w_bytes
        b = np.frombuffer(blob, dtype="<f8", count=out_w, offset=pos)
        pos += b_bytes
        layers.append(
            DenseLayer(
                weights=w.reshape(out_w, in_w).copy(), bias=b.copy(), activation=act
            )
        )
    if pos != len(blob):
        fail(pos, "trailing bytes after parameters")
    try:
        return DenseModel(tuple(layers))
    except (DimensionMismatch, InvalidMetadata) as exc:
        raise FormatError(pos, f"inconsistent model: {exc}") from exc
