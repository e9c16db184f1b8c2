"""On-disk formats: WFRF channel-data files and binary PGM images.

WFRF layout (all integers little-endian u32):

    bytes 0..3    magic ``b"WFRF"``
    bytes 4..7    format version (currently 1)
    bytes 8..11   frame count
    bytes 12..15  metadata byte length L
    bytes 16..    metadata: UTF-8 JSON (acquisition context, tx scheme,
                  frame shape, dtype "f32"/"f64")
    then          frame payloads, each ``n_tx * n_rx * n_samples`` values,
                  little-endian, C order [tx][rx][sample] (sample fastest)

The metadata JSON object carries: ``speed_of_sound``, ``sampling_frequency``,
``n_elements``, ``pitch``, ``tx_scheme`` (``{"type": "sta", "tx_elements":
[...]}`` or ``{"type": "pw", "angles_rad": [...]}``), optional
``rx_channel_map`` (nested list or null), ``time_zero_offset`` (scalar or
list), ``dtype``, and ``frame_shape`` ``[n_tx, n_rx, n_samples]``.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import DimensionMismatch, FormatError, WrongStage
from .types import (
    AcquisitionContext,
    BmodeImage,
    PwScheme,
    RfFrame,
    StaScheme,
    validate_pair,
)

WFRF_MAGIC = b"WFRF"
WFRF_VERSION = 1

_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


def context_to_dict(ctx: AcquisitionContext) -> dict:
    """Serialize an AcquisitionContext to the WFRF metadata dict."""
    if isinstance(ctx.tx_scheme, StaScheme):
        scheme = {"type": "sta", "tx_elements": list(ctx.tx_scheme.tx_elements)}
    else:
        scheme = {"type": "pw", "angles_rad": list(ctx.tx_scheme.angles_rad)}
    rx_map = ctx.rx_channel_map
    return {
        "speed_of_sound": ctx.speed_of_sound,
        "sampling_frequency": ctx.sampling_frequency,
        "n_elements": ctx.n_elements,
        "pitch": ctx.pitch,
        "tx_scheme": scheme,
        "rx_channel_map": rx_map.tolist() if rx_map is not None else None,
        "time_zero_offset": np.asarray(ctx.time_zero_offset).tolist(),
    }


def context_from_dict(meta: dict) -> AcquisitionContext:
    """Build an AcquisitionContext from parsed WFRF metadata."""
    scheme_raw = meta["tx_scheme"]
    if scheme_raw["type"] == "sta":
        scheme = StaScheme(tuple(scheme_raw["tx_elements"]))
    elif scheme_raw["type"] == "pw":
        scheme = PwScheme(tuple(scheme_raw["angles_rad"]))
    else:
        raise FormatError(0, f"unknown tx scheme type {scheme_raw['type']!r}")
    rx_map = meta.get("rx_channel_map")
    return AcquisitionContext(
        speed_of_sound=float(meta["speed_of_sound"]),
        sampling_frequency=float(meta["sampling_frequency"]),
        n_elements=int(meta["n_elements"]),
        pitch=float(meta["pitch"]),
        tx_scheme=scheme,
        rx_channel_map=np.asarray(rx_map, dtype=np.int64) if rx_map is not None else None,
        time_zero_offset=np.asarray(meta.get("time_zero_offset", 0.0)),
    )


def write_wfrf(path, frames: list[RfFrame], ctx: AcquisitionContext) -> None:
    """Write frames and their shared context to a WFRF file.

    All frames must share one shape and dtype; the pairing is validated
    before any bytes hit the disk.
    """
    shapes = {f.data.shape for f in frames}
    if len(shapes) > 1:
        raise DimensionMismatch(0, f"frames have differing shapes: {sorted(shapes)}")
    dtypes = {f.dtype for f in frames}
    if len(dtypes) > 1:
        raise DimensionMismatch(0, f"frames have differing dtypes: {dtypes}")
    for f in frames:
        validate_pair(f, ctx)

    meta = context_to_dict(ctx)
    if frames:
        meta["frame_shape"] = list(frames[0].data.shape)
        meta["dtype"] = "f32" if frames[0].dtype == np.float32 else "f64"
    else:
        meta["frame_shape"] = None
        meta["dtype"] = "f64"
    meta_bytes = json.dumps(meta).encode("utf-8")

    with open(path, "wb") as fh:
        fh.write(WFRF_MAGIC)
        fh.write(struct.pack("<III", WFRF_VERSION, len(frames), len(meta_bytes)))
        fh.write(meta_bytes)
        le = _DTYPES[meta["dtype"]]
        for f in frames:
            fh.write(np.ascontiguousarray(f.data, dtype=le).tobytes())


class WfrfReader:
    """Sequential reader over the frames of one WFRF file."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "rb")
        try:
            self._read_header()
        except Exception:
            self._fh.close()
            raise

    def _read_header(self):
        head = self._fh.read(16)
        if len(head) < 16:
            raise FormatError(len(head), "truncated header")
        if head[:4] != WFRF_MAGIC:
            raise FormatError(0, "bad magic")
        version, count, meta_len = struct.unpack("<III", head[4:16])
        if version != WFRF_VERSION:
            raise FormatError(4, f"unsupported version {version}")
        meta_bytes = self._fh.read(meta_len)
        if len(meta_bytes) < meta_len:
            raise FormatError(16 + len(meta_bytes), "truncated metadata block")
        try:
            meta = json.loads(meta_bytes.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(16, f"unparseable metadata: {exc}") from exc
        self.frame_count = count
        self.context = context_from_dict(meta)
        self.dtype = _DTYPES.get(meta.get("dtype"))
        if self.dtype is None:
            raise FormatError(16, f"unknown dtype {meta.get('dtype')!r}")
        self.frame_shape = meta.get("frame_shape")
        if count > 0:
            if self.frame_shape is None or len(self.frame_shape) != 3:
                raise FormatError(16, "missing or malformed frame_shape")
            self.frame_shape = tuple(int(d) for d in self.frame_shape)
        self._frames_read = 0
        self._payload_start = 16 + meta_len

    def read_frame(self) -> RfFrame | None:
        """Next frame in stored order, or None at end of stream."""
        if self._frames_read >= self.frame_count:
            return None
        nbytes = int(np.prod(self.frame_shape)) * self.dtype.itemsize
        offset = self._payload_start + self._frames_read * nbytes
        raw = self._fh.read(nbytes)
        if len(raw) < nbytes:
            raise FormatError(offset + len(raw), "truncated frame payload")
        data = np.frombuffer(raw, dtype=self.dtype).reshape(self.frame_shape)
        self._frames_read += 1
        return RfFrame(data.astype(self.dtype.newbyteorder("="), copy=True))

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_wfrf(path) -> tuple[list[RfFrame], AcquisitionContext]:
    """Read every frame of a WFRF file at once."""
    with WfrfReader(path) as reader:
        frames = []
        while (frame := reader.read_frame()) is not None:
            frames.append(frame)
        return frames, reader.context


def write_pgm(img: BmodeImage, path) -> None:
    """Write a display-stage image as a binary (P5) PGM, 8 bits per pixel.

    Display value v maps to pixel round(v * 255), half-up.
    """
    if img.stage != "display":
        raise WrongStage(f"write_pgm needs a display-stage image, got {img.stage!r}")
    pixels = np.floor(img.data * 255.0 + 0.5).astype(np.uint8)
    n_z, n_x = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n_x} {n_z}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
