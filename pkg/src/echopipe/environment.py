"""Sources of (RfFrame, AcquisitionContext) observations.

Two sources are provided: a WFRF dataset reader and a point-scatterer
simulator.  The simulator is deliberately a pure delay-geometry oracle:
echoes are Hann-windowed tone bursts evaluated analytically at exact
continuous time, with no attenuation, directivity, or diffraction, so the
beamformer's delay and interpolation errors are observable against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMetadata
from .formats import WfrfReader
from .types import AcquisitionContext, RfFrame, validate_pair


@dataclass(frozen=True)
class Phantom:
    """Point scatterers plus the transmit pulse they echo back.

    Scatterers are (x, z, amplitude) with z > 0; the pulse is a tone burst
    of ``n_cycles`` at ``center_frequency`` under a Hann envelope.  The burst
    is zero-phase: its envelope peaks exactly at the geometric round-trip
    time of flight, which is what makes the simulator usable as a
    localization oracle.
    """

    scatterers: tuple[tuple[float, float, float], ...]
    center_frequency: float
    n_cycles: float

    def __post_init__(self):
        scat = tuple(
            (float(x), float(z), float(a)) for x, z, a in self.scatterers
        )
        object.__setattr__(self, "scatterers", scat)
        for x, z, a in scat:
            if not z > 0:
                raise InvalidMetadata("scatterers", f"z must be > 0, got {z}")
            if not (math.isfinite(x) and math.isfinite(a)):
                raise InvalidMetadata("scatterers", "non-finite scatterer")
        if not (math.isfinite(self.center_frequency) and self.center_frequency > 0):
            raise InvalidMetadata("center_frequency", "must be finite and > 0")
        if not self.n_cycles > 0:
            raise InvalidMetadata("n_cycles", "must be > 0")

    @property
    def burst_duration(self) -> float:
        return self.n_cycles / self.center_frequency


def pulse_waveform(phantom: Phantom, t: np.ndarray) -> np.ndarray:
    """Evaluate the transmit burst at continuous times ``t`` (seconds).

    ``p(t) = cos(2 pi fc t) * 0.5 * (1 + cos(2 pi t / T))`` for |t| <= T/2,
    zero outside; peak value 1 at t = 0.
    """
    t = np.asarray(t, dtype=np.float64)
    half = phantom.burst_duration / 2.0
    carrier = np.cos(2.0 * np.pi * phantom.center_frequency * t)
    window = 0.5 * (1.0 + np.cos(2.0 * np.pi * t / phantom.burst_duration))
    return np.where(np.abs(t) <= half, carrier * window, 0.0)


def scatterer_delay(
    ctx: AcquisitionContext, acq: int, x: float, z: float
) -> np.ndarray:
    """Exact two-way time of flight from transmit to (x, z) to each channel."""
    elem_x = ctx.element_positions()
    rx_idx = None
    if ctx.rx_channel_map is not None:
        rx_idx = ctx.rx_channel_map[acq]
    else:
        rx_idx = np.arange(ctx.n_elements)
    rx_x = elem_x[rx_idx]
    d_rx = np.sqrt((x - rx_x) ** 2 + z**2)
    if ctx.is_pw:
        alpha = ctx.tx_scheme.angles_rad[acq]
        d_tx = z * math.cos(alpha) + x * math.sin(alpha)
    else:
        tx_x = elem_x[ctx.tx_scheme.tx_elements[acq]]
        d_tx = math.sqrt((x - tx_x) ** 2 + z**2)
    return (d_tx + d_rx) / ctx.speed_of_sound


def simulate_rf(
    phantom: Phantom,
    ctx: AcquisitionContext,
    n_samples: int,
    dtype=np.float64,
) -> RfFrame:
    """Simulate one RF frame of the phantom under the given acquisition.

    Sample k of acquisition e records continuous time ``k/fs + t0_e``; each
    scatterer contributes ``amplitude * p(sample_time - tau)`` with tau the
    exact two-way time of flight.  Scatterer contributions superpose; there
    is no noise term.
    """
    if n_samples < 1:
        raise InvalidMetadata("n_samples", "must be >= 1")
    n_rx = (
        ctx.rx_channel_map.shape[1]
        if ctx.rx_channel_map is not None
        else ctx.n_elements
    )
    fs = ctx.sampling_frequency
    half = phantom.burst_duration / 2.0
    span = int(math.floor(phantom.burst_duration * fs)) + 2

    frame = np.zeros((ctx.n_tx, n_rx, n_samples), dtype=np.float64)
    offsets = np.arange(span)
    for e in range(ctx.n_tx):
        t0 = float(ctx.time_zero_offset[e])
        for x, z, amp in phantom.scatterers:
            tau = scatterer_delay(ctx, e, x, z)
            k0 = np.ceil((tau - half - t0) * fs).astype(np.int64)
            k = k0[:, None] + offsets[None, :]
            t = (k / fs + t0) - tau[:, None]
            values = amp * pulse_waveform(phantom, t)
            valid = (k >= 0) & (k < n_samples)
            values[~valid] = 0.0
            rows = np.broadcast_to(np.arange(n_rx)[:, None], k.shape)
            np.add.at(frame[e], (rows[valid], k[valid]), values[valid])
    return RfFrame(frame.astype(dtype, copy=False))


class Environment:
    """Stateful, single-consumer stream of validated observations."""

    def __init__(self, source):
        self._source = source
        self.frames_delivered = 0

    def next_observation(self) -> tuple[RfFrame, AcquisitionContext] | None:
        """Next (frame, context) pair, or None at end of stream."""
        obs = self._source.next_frame()
        if obs is None:
            return None
        frame, ctx = obs
        validate_pair(frame, ctx)
        self.frames_delivered += 1
        return frame, ctx

    def __iter__(self):
        while (obs := self.next_observation()) is not None:
            yield obs

    def close(self):
        close = getattr(self._source, "close", None)
        if close is not None:
            close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class DatasetSource:
    """Reads frames in stored order from a WFRF file."""

    def __init__(self, path):
        self._reader = WfrfReader(path)

    def next_frame(self):
        frame = self._reader.read_frame()
        if frame is None:
            return None
        return frame, self._reader.context

    def close(self):
        self._reader.close()


class SimulatorSource:
    """Synthesizes frames of one phantom, indefinitely.

    Frames are deterministic given the seed: without noise every frame is
    identical; with ``noise_std > 0`` white Gaussian noise is drawn from a
    seeded generator, so two sources with equal seeds emit equal sequences.
    """

    def __init__(
        self,
        phantom: Phantom,
        ctx: AcquisitionContext,
        n_samples: int,
        dtype=np.float64,
        seed: int = 0,
        noise_std: float = 0.0,
        max_frames: int | None = None,
    ):
        self.phantom = phantom
        self.ctx = ctx
        self.n_samples = int(n_samples)
        self.dtype = np.dtype(dtype)
        self.noise_std = float(noise_std)
        self.max_frames = max_frames
        self._rng = np.random.default_rng(seed)
        self._emitted = 0
        self._clean = None

    def next_frame(self):
        if self.max_frames is not None and self._emitted >= self.max_frames:
            return None
        if self._clean is None:
            self._clean = simulate_rf(
                self.phantom, self.ctx, self.n_samples, dtype=self.dtype
            )
        frame = self._clean
        if self.noise_std > 0.0:
            noise = self._rng.normal(0.0, self.noise_std, frame.data.shape)
            frame = RfFrame((frame.data + noise).astype(self.dtype, copy=False))
        self._emitted += 1
        return frame, self.ctx


def open_dataset(path) -> Environment:
    """Open a WFRF file as an environment yielding its frames in order."""
    return Environment(DatasetSource(path))


def open_simulator(
    phantom: Phantom,
    ctx: AcquisitionContext,
    n_samples: int,
    dtype=np.float64,
    seed: int = 0,
    noise_std: float = 0.0,
    max_frames: int | None = None,
) -> Environment:
    """Wrap a simulator source as an environment."""
    return Environment(
        SimulatorSource(
            phantom, ctx, n_samples, dtype=dtype, seed=seed,
            noise_std=noise_std, max_frames=max_frames,
        )
    )


def next_observation(env: Environment):
    """Functional alias for :meth:`Environment.next_observation`."""
    return env.next_observation()
