"""Synthetic benchmark presets matching the published experiment shapes.

Two presets ship so Table-style benchmark runs need no external data:

* ``sta-paper`` — synthetic-aperture wire phantom, frames (128, 64, 2048),
  reconstructed on the native 2048 x 128 grid.  The 64 receive channels
  follow a receive aperture centered on the transmit element and clipped at
  the array edges (the dataset convention is not published; this is the
  documented assumption).
* ``pwi-paper`` — plane-wave wire phantom, frames (11, 192, 2048) over a
  symmetric -10..10 degree fan in 2 degree steps, reconstructed on the
  default 512 x 128 grid.

Preset pipelines use nearest-sample interpolation: at 40 MHz sampling of a
5 MHz pulse the sub-sample error is negligible, and the benchmark measures
operator throughput.  Reconstruction quality work should use the library
default (linear).
"""

from __future__ import annotations

import numpy as np

from .environment import Environment, Phantom, open_simulator
from .pipeline import bmode_chain
from .types import AcquisitionContext, PwScheme, StaScheme, centered_rx_map

N_SAMPLES = 2048
SPEED_OF_SOUND = 1540.0
SAMPLING_FREQUENCY = 40e6
PITCH = 2e-4
PULSE_FREQUENCY = 5e6
PULSE_CYCLES = 2.0


def default_pw_angles() -> np.ndarray:
    """Symmetric 11-angle fan, -10 to +10 degrees in 2 degree steps."""
    return np.deg2rad(np.arange(-10.0, 10.0 + 1e-9, 2.0))


def wire_phantom() -> Phantom:
    """Three point targets at staggered depths, centered laterally."""
    return Phantom(
        scatterers=(
            (0.0, 10e-3, 1.0),
            (2e-3, 20e-3, 1.0),
            (-3e-3, 30e-3, 1.0),
        ),
        center_frequency=PULSE_FREQUENCY,
        n_cycles=PULSE_CYCLES,
    )


def sta_paper_context() -> AcquisitionContext:
    tx_elements = tuple(range(128))
    return AcquisitionContext(
        speed_of_sound=SPEED_OF_SOUND,
        sampling_frequency=SAMPLING_FREQUENCY,
        n_elements=128,
        pitch=PITCH,
        tx_scheme=StaScheme(tx_elements),
        rx_channel_map=centered_rx_map(128, 64, tx_elements),
    )


def pwi_paper_context() -> AcquisitionContext:
    return AcquisitionContext(
        speed_of_sound=SPEED_OF_SOUND,
        sampling_frequency=SAMPLING_FREQUENCY,
        n_elements=192,
        pitch=PITCH,
        tx_scheme=PwScheme(tuple(default_pw_angles())),
    )


PRESET_NAMES = ("sta-paper", "pwi-paper")


def preset_context(name: str) -> AcquisitionContext:
    if name == "sta-paper":
        return sta_paper_context()
    if name == "pwi-paper":
        return pwi_paper_context()
    raise KeyError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def preset_environment(
    name: str, dtype=np.float32, seed: int = 0, max_frames: int | None = None
) -> Environment:
    """Simulator environment emitting the preset's frames indefinitely."""
    ctx = preset_context(name)
    return open_simulator(
        wire_phantom(), ctx, N_SAMPLES, dtype=dtype, seed=seed, max_frames=max_frames
    )


def preset_pipeline(name: str) -> dict:
    """The standard reconstruction chain configured for the preset."""
    preset_context(name)  # validates the name
    return bmode_chain(range_db=30.0, interpolation="nearest")


def preset_mode_label(ctx: AcquisitionContext) -> str:
    """Column label in the benchmark table: STAI or PWI."""
    return "PWI" if ctx.is_pw else "STAI"
