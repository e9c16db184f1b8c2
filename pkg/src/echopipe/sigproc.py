"""Pre- and post-processing operators: FIR filtering, analytic signal,
envelope magnitude, and dynamic-range adjustment for display."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import fft, ifft
from scipy.signal import lfilter

from .errors import (
    AllZeroInput,
    AxisTooShort,
    EmptyCoefficients,
    NonPositiveRange,
)


@dataclass(frozen=True, eq=False)
class FirSpec:
    """FIR filter taps, applied causally along the sample axis."""

    coefficients: np.ndarray

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.coefficients, dtype=np.float64))
        if h.size < 1:
            raise EmptyCoefficients("FIR filter needs at least one coefficient")
        if not np.all(np.isfinite(h)):
            raise EmptyCoefficients("FIR coefficients must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "coefficients", h)


def fir_filter(x: np.ndarray, spec: FirSpec, axis: int = -1) -> np.ndarray:
    """Causal FIR convolution ``y[n] = sum_m h[m] * x[n - m]``.

    History before sample 0 is zero, so the output has the same length as
    the input along ``axis``.
    """
    x = np.asarray(x)
    if x.shape[axis] < 1:
        raise AxisTooShort("filter axis must have length >= 1")
    return lfilter(spec.coefficients, [1.0], x, axis=axis)


def analytic_signal(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Analytic signal of a real tensor via one-sided spectrum doubling.

    Per 1-D lane of length N: take the FFT, keep DC (and the Nyquist bin for
    even N) at unit gain, double the positive-frequency bins, zero the
    negative ones, and inverse-transform.  The real part of the result equals
    the input up to FFT round-off.
    """
    x = np.asarray(x)
    if np.iscomplexobj(x):
        raise ValueError("analytic_signal expects a real tensor")
    n = x.shape[axis]
    if n < 2:
        raise AxisTooShort("analytic signal needs axis length >= 2")
    spectrum = fft(x, axis=axis)
    gain = np.zeros(n, dtype=x.dtype if x.dtype == np.float32 else np.float64)
    if n % 2 == 0:
        gain[0] = 1.0
        gain[n // 2] = 1.0
        gain[1 : n // 2] = 2.0
    else:
        gain[0] = 1.0
        gain[1 : (n + 1) // 2] = 2.0
    shape = [1] * x.ndim
    shape[axis] = n
    return ifft(spectrum * gain.reshape(shape), axis=axis)


def envelope(z: np.ndarray) -> np.ndarray:
    """Elementwise magnitude; for analytic signals this is the RF envelope."""
    return np.abs(z)


def dynamic_adjustment(e: np.ndarray, range_db: float) -> np.ndarray:
    """Log-compress an envelope to display values in [0, 1].

    The per-frame peak maps to 1; anything ``range_db`` or more below the
    peak maps to 0.  Zero inputs map to 0 without evaluating the log.
    """
    if not (np.isfinite(range_db) and range_db > 0):
        raise NonPositiveRange(f"range_db must be > 0, got {range_db}")
    e = np.asarray(e)
    peak = e.max() if e.size else 0.0
    if not peak > 0:
        raise AllZeroInput("dynamic adjustment needs a strictly positive element")
    out = np.zeros(e.shape, dtype=np.float64)
    pos = e > 0
    db = 20.0 * np.log10(e[pos] / peak)
    out[pos] = np.clip(db + range_db, 0.0, range_db) / range_db
    return out
