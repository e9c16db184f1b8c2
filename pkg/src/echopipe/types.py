"""Core tensor and metadata types shared by every operator.

Conventions used throughout the package:

* raw channel data is indexed ``[acquisition, channel, sample]``,
* the probe is a uniform linear array on the ``z = 0`` line, centered at the
  origin: element ``i`` sits at ``x_i = (i - (n_elements - 1) / 2) * pitch``,
* images are indexed ``[depth, lateral]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidMetadata

FLOAT_DTYPES = (np.float32, np.float64)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RfFrame:
    """One frame of raw RF channel data, shape ``[n_tx, n_rx, n_samples]``."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.dtype not in FLOAT_DTYPES:
            raise InvalidMetadata("data", f"dtype must be f32/f64, got {a.dtype}")
        if a.ndim != 3:
            raise DimensionMismatch(a.ndim, "RF frame must be 3-D [tx, rx, sample]")
        if min(a.shape) < 1:
            raise DimensionMismatch(int(np.argmin(a.shape)), "all dims must be >= 1")
        if not np.all(np.isfinite(a)):
            raise InvalidMetadata("data", "non-finite sample values")
        object.__setattr__(self, "data", _freeze(a))

    @property
    def n_tx(self) -> int:
        return self.data.shape[0]

    @property
    def n_rx(self) -> int:
        return self.data.shape[1]

    @property
    def n_samples(self) -> int:
        return self.data.shape[2]

    @property
    def dtype(self):
        return self.data.dtype


@dataclass(frozen=True)
class StaScheme:
    """Synthetic transmit aperture: one transmit element index per acquisition."""

    tx_elements: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tx_elements", tuple(int(i) for i in self.tx_elements))
        if len(self.tx_elements) < 1:
            raise InvalidMetadata("tx_elements", "at least one acquisition required")

    def __len__(self) -> int:
        return len(self.tx_elements)


@dataclass(frozen=True)
class PwScheme:
    """Plane-wave imaging: one steering angle (radians) per acquisition."""

    angles_rad: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "angles_rad", tuple(float(a) for a in self.angles_rad))
        if len(self.angles_rad) < 1:
            raise InvalidMetadata("angles_rad", "at least one acquisition required")
        for a in self.angles_rad:
            if not (-np.pi / 2 < a < np.pi / 2):
                raise InvalidMetadata("angles_rad", f"angle {a} outside (-pi/2, pi/2)")

    def __len__(self) -> int:
        return len(self.angles_rad)


@dataclass(frozen=True, eq=False)
class AcquisitionContext:
    """Physical and probe metadata needed to interpret an :class:`RfFrame`.

    ``rx_channel_map`` maps channel ``j`` of acquisition ``e`` to a physical
    element index.  ``None`` means identity, which is only valid when the
    paired frame has ``n_rx == n_elements``.  ``time_zero_offset`` is the
    delay from acquisition start to sample 0, one value per acquisition
    (a scalar broadcasts to all acquisitions).
    """

    speed_of_sound: float
    sampling_frequency: float
    n_elements: int
    pitch: float
    tx_scheme: StaScheme | PwScheme
    rx_channel_map: np.ndarray | None = None
    time_zero_offset: float | np.ndarray = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.speed_of_sound) and self.speed_of_sound > 0):
            raise InvalidMetadata("speed_of_sound", "must be finite and > 0")
        if not (np.isfinite(self.sampling_frequency) and self.sampling_frequency > 0):
            raise InvalidMetadata("sampling_frequency", "must be finite and > 0")
        if self.n_elements < 1:
            raise InvalidMetadata("n_elements", "must be >= 1")
        if not (np.isfinite(self.pitch) and self.pitch > 0):
            raise InvalidMetadata("pitch", "must be finite and > 0")
        if not isinstance(self.tx_scheme, (StaScheme, PwScheme)):
            raise InvalidMetadata("tx_scheme", "must be StaScheme or PwScheme")
        if isinstance(self.tx_scheme, StaScheme):
            for i in self.tx_scheme.tx_elements:
                if not 0 <= i < self.n_elements:
                    raise InvalidMetadata("tx_scheme", f"tx element {i} out of range")

        if self.rx_channel_map is not None:
            m = np.asarray(self.rx_channel_map, dtype=np.int64)
            if m.ndim != 2:
                raise InvalidMetadata("rx_channel_map", "must be 2-D [n_tx, n_rx]")
            if m.shape[0] != self.n_tx:
                raise InvalidMetadata(
                    "rx_channel_map",
                    f"{m.shape[0]} rows != {self.n_tx} acquisitions",
                )
            if m.size and (m.min() < 0 or m.max() >= self.n_elements):
                raise InvalidMetadata("rx_channel_map", "entry outside [0, n_elements)")
            object.__setattr__(self, "rx_channel_map", _freeze(m))

        t0 = np.asarray(self.time_zero_offset, dtype=np.float64)
        if t0.ndim == 0:
            t0 = np.full(self.n_tx, float(t0))
        if t0.shape != (self.n_tx,):
            raise InvalidMetadata(
                "time_zero_offset", f"needs {self.n_tx} entries, got shape {t0.shape}"
            )
        if not np.all(np.isfinite(t0)):
            raise InvalidMetadata("time_zero_offset", "non-finite value")
        object.__setattr__(self, "time_zero_offset", _freeze(t0))

    @property
    def n_tx(self) -> int:
        return len(self.tx_scheme)

    @property
    def is_pw(self) -> bool:
        return isinstance(self.tx_scheme, PwScheme)

    def element_positions(self) -> np.ndarray:
        """Lateral element centers in meters; symmetric around x = 0."""
        i = np.arange(self.n_elements, dtype=np.float64)
        return (i - (self.n_elements - 1) / 2.0) * self.pitch

    def channel_elements(self, n_rx: int) -> np.ndarray:
        """Resolve the channel-to-element map as an int array [n_tx, n_rx]."""
        if self.rx_channel_map is not None:
            if self.rx_channel_map.shape[1] != n_rx:
                raise DimensionMismatch(1, "rx_channel_map columns != n_rx")
            return self.rx_channel_map
        if n_rx != self.n_elements:
            raise InvalidMetadata(
                "rx_channel_map",
                f"identity map needs n_rx == n_elements ({n_rx} != {self.n_elements})",
            )
        return np.broadcast_to(np.arange(n_rx, dtype=np.int64), (self.n_tx, n_rx))


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Rectilinear pixel grid: lateral positions ``x`` and depths ``z`` (meters)."""

    x_positions: np.ndarray
    z_positions: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x_positions, dtype=np.float64)
        z = np.asarray(self.z_positions, dtype=np.float64)
        for name, v in (("x_positions", x), ("z_positions", z)):
            if v.ndim != 1 or v.size < 1:
                raise InvalidMetadata(name, "must be a non-empty 1-D array")
            if not np.all(np.isfinite(v)):
                raise InvalidMetadata(name, "non-finite position")
            if v.size > 1 and not np.all(np.diff(v) > 0):
                raise InvalidMetadata(name, "must be strictly increasing")
        if z[0] < 0:
            raise InvalidMetadata("z_positions", "depths must be >= 0")
        object.__setattr__(self, "x_positions", _freeze(x))
        object.__setattr__(self, "z_positions", _freeze(z))

    @property
    def n_x(self) -> int:
        return self.x_positions.size

    @property
    def n_z(self) -> int:
        return self.z_positions.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_z, self.n_x)


STAGES = ("rf", "complex_analytic", "envelope", "display")


@dataclass(frozen=True, eq=False)
class BmodeImage:
    """2-D image tensor ``[depth, lateral]`` tagged with its pipeline stage."""

    data: np.ndarray
    stage: str
    grid: ImageGrid

    def __post_init__(self):
        a = np.asarray(self.data)
        if self.stage not in STAGES:
            raise InvalidMetadata("stage", f"must be one of {STAGES}")
        if a.ndim != 2:
            raise DimensionMismatch(a.ndim, "image must be 2-D [depth, lateral]")
        if a.shape != self.grid.shape:
            raise DimensionMismatch(0, f"image {a.shape} != grid {self.grid.shape}")
        if self.stage == "complex_analytic":
            if not np.iscomplexobj(a):
                raise InvalidMetadata("data", "complex_analytic stage must be complex")
        elif np.iscomplexobj(a):
            raise InvalidMetadata("data", f"{self.stage} stage must be real")
        if self.stage == "envelope" and a.size and a.min() < 0:
            raise InvalidMetadata("data", "envelope values must be >= 0")
        if self.stage == "display" and a.size and (a.min() < 0 or a.max() > 1):
            raise InvalidMetadata("data", "display values must be in [0, 1]")
        object.__setattr__(self, "data", _freeze(a))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class ApodizationSpec:
    """Receive apodization: window kind plus dynamic-aperture f-number.

    ``f_number == 0`` disables the dynamic aperture (all elements active).
    """

    window: str = "rectangular"
    f_number: float = 0.0

    def __post_init__(self):
        if self.window not in ("rectangular", "hann"):
            raise InvalidMetadata("window", "must be 'rectangular' or 'hann'")
        if not np.isfinite(self.f_number) or self.f_number < 0:
            raise InvalidMetadata("f_number", "must be finite and >= 0")


def validate_pair(frame: RfFrame, ctx: AcquisitionContext) -> tuple[RfFrame, AcquisitionContext]:
    """Check that a frame and its acquisition context are mutually consistent.

    Returns the pair unchanged on success; raises :class:`DimensionMismatch`
    or :class:`InvalidMetadata` otherwise.
    """
    if frame.n_tx != ctx.n_tx:
        raise DimensionMismatch(
            0, f"frame has {frame.n_tx} acquisitions, tx scheme has {ctx.n_tx}"
        )
    ctx.channel_elements(frame.n_rx)  # raises if the map is absent or malformed
    return frame, ctx


def default_grid(
    ctx: AcquisitionContext,
    n_samples: int,
    mode: str,
    n_z_override: int | None = None,
) -> ImageGrid:
    """Build the default reconstruction grid for a transmit scheme.

    STA mode images one lateral column per transmit element at the native
    axial sampling ``z_k = k * c / (2 * fs)``, so a frame of ``n_samples``
    samples maps onto an ``n_samples x n_tx`` image.  PW mode spans the
    aperture with 128 lateral positions and the full imaging depth with
    512 rows (``n_z_override`` changes the row count in either mode).
    """
    if n_samples < 1:
        raise InvalidMetadata("n_samples", "must be >= 1")
    dz_native = ctx.speed_of_sound / (2.0 * ctx.sampling_frequency)
    if mode == "sta":
        if not isinstance(ctx.tx_scheme, StaScheme):
            raise InvalidMetadata("tx_scheme", "sta grid needs an StaScheme context")
        x = ctx.element_positions()[list(ctx.tx_scheme.tx_elements)]
        n_z = n_z_override if n_z_override is not None else n_samples
        z = np.arange(n_z, dtype=np.float64) * dz_native
    elif mode == "pw":
        elem_x = ctx.element_positions()
        if ctx.n_elements == 1:
            x = np.array([0.0])
        else:
            x = np.linspace(elem_x[0], elem_x[-1], 128)
        n_z = n_z_override if n_z_override is not None else 512
        z_max = n_samples * dz_native
        z = np.linspace(0.0, z_max, n_z) if n_z > 1 else np.array([0.0])
    else:
        raise InvalidMetadata("mode", "must be 'sta' or 'pw'")
    return ImageGrid(x_positions=x, z_positions=z)


def centered_rx_map(n_elements: int, n_rx: int, tx_elements) -> np.ndarray:
    """Receive map for an n_rx-wide aperture centered on each transmit element.

    The aperture is clipped at the array edges so every channel maps to a
    real element.  This is the documented convention for datasets that record
    fewer channels than the probe has elements.
    """
    if n_rx > n_elements:
        raise InvalidMetadata("rx_channel_map", "n_rx cannot exceed n_elements")
    rows = []
    for te in tx_elements:
        start = int(te) - n_rx // 2
        start = max(0, min(start, n_elements - n_rx))
        rows.append(np.arange(start, start + n_rx, dtype=np.int64))
    return np.stack(rows)
