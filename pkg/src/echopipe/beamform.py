"""Delay-and-Sum reconstruction for STA and plane-wave transmit schemes.

Two implementations share one mathematical definition:

* :func:`das_beamform` — compiled kernel, parallel over pixels; each pixel
  accumulates its contributions sequentially in ascending (acquisition,
  channel) order, so results are bitwise independent of the thread count.
* :func:`das_beamform_oracle` — direct Python triple loop over pixels,
  acquisitions, and channels, for small instances.  In f64 the two agree to
  the last bit in nearest-interpolation mode because every floating-point
  operation is performed in the same order.

Per pixel p = (x, z) and acquisition e:

    STA:  tau = (|p - a_tx(e)| + |p - a_rx(e, j)|) / c
    PW:   tau = (z cos(alpha_e) + x sin(alpha_e) + |p - a_rx(e, j)|) / c

with the plane wavefront crossing the array origin at t = 0.  The sample
index is ``fs * (tau - t0_e)``; indices outside [0, n_samples - 1]
contribute exactly zero.  Both implementations evaluate the index as
``(fs * d_tx / c + fs * d_rx / c) - fs * t0_e``, one rounding per operator,
which is what makes their agreement exact rather than merely close.
"""

from __future__ import annotations

import math

import numba
import numpy as np
from numba import njit, prange

from .errors import InvalidMetadata
from .types import (
    AcquisitionContext,
    ApodizationSpec,
    BmodeImage,
    ImageGrid,
    RfFrame,
    validate_pair,
)

INTERPOLATION_MODES = ("nearest", "linear")

_PIXEL_BLOCK = 16384


def hann_weight_table(n_elements: int) -> np.ndarray:
    """Table of symmetric Hann windows: row M holds the M-point window.

    ``w[m] = 0.5 - 0.5 cos(2 pi m / (M - 1))`` for m in [0, M); a single
    active element gets weight 1.  Entries past column M are zero-padded.
    """
    tab = np.zeros((n_elements + 1, max(n_elements, 1)))
    for m_count in range(1, n_elements + 1):
        if m_count == 1:
            tab[1, 0] = 1.0
        else:
            idx = np.arange(m_count)
            tab[m_count, :m_count] = 0.5 - 0.5 * np.cos(
                2.0 * np.pi * idx / (m_count - 1)
            )
    return tab


def _aperture_span(elem_x, px, pz, f_number):
    """Active-element index span per pixel: (i0, i1) inclusive, i1 < i0 if none."""
    n_el = elem_x.size
    n_px = px.size
    if f_number == 0.0:
        i0 = np.zeros(n_px, dtype=np.int64)
        i1 = np.full(n_px, n_el - 1, dtype=np.int64)
        return i0, i1
    half = pz / (2.0 * f_number)
    mask = np.abs(elem_x[:, None] - px[None, :]) <= half[None, :]
    any_active = mask.any(axis=0)
    i0 = np.argmax(mask, axis=0).astype(np.int64)
    i1 = (n_el - 1 - np.argmax(mask[::-1, :], axis=0)).astype(np.int64)
    i0[~any_active] = 0
    i1[~any_active] = -1
    return i0, i1


def aperture_weight_table(
    ctx: AcquisitionContext,
    px: np.ndarray,
    pz: np.ndarray,
    apod: ApodizationSpec,
) -> np.ndarray:
    """Per-(element, pixel) receive weights in [0, 1], shape (n_elements, n_px).

    Elements outside the dynamic-aperture gate ``|x_elem - x| <= z / (2 F)``
    get exactly 0; inside, the window (rectangular or Hann) is laid across
    the active span.
    """
    elem_x = ctx.element_positions()
    n_el = elem_x.size
    px = np.asarray(px, dtype=np.float64)
    pz = np.asarray(pz, dtype=np.float64)
    i0, i1 = _aperture_span(elem_x, px, pz, apod.f_number)
    counts = i1 - i0 + 1
    idx = np.arange(n_el, dtype=np.int64)[:, None]
    active = (idx >= i0[None, :]) & (idx <= i1[None, :])
    if apod.window == "rectangular":
        return np.where(active, 1.0, 0.0)
    tab = hann_weight_table(n_el)
    pos = np.clip(idx - i0[None, :], 0, tab.shape[1] - 1)
    counts_grid = np.broadcast_to(np.clip(counts, 0, n_el)[None, :], active.shape)
    return np.where(active, tab[counts_grid, pos], 0.0)


def active_aperture(
    ctx: AcquisitionContext, pixel: tuple[float, float], apod: ApodizationSpec
) -> np.ndarray:
    """Receive weight of every element for one pixel (x, z)."""
    x, z = pixel
    return aperture_weight_table(
        ctx, np.array([float(x)]), np.array([float(z)]), apod
    )[:, 0]


@njit(parallel=True, cache=True)
def _das_kernel(
    x_pad, tx_rows, te_idx, d_rx, weights, rx_map, t0_smp, half, one,
    nearest, uniform, out,
):
    # tx_rows / d_rx hold per-path delays already scaled to sample units
    # (fs * distance / c); t0_smp is fs * t0 per acquisition.  x_pad carries
    # one zero sentinel sample at each end of every trace, so out-of-range
    # indices clamp onto a sentinel and contribute an exact zero add; no
    # masking is needed.  With ``uniform`` weights (all exactly 1) the
    # weight multiply is skipped, which changes no output bit.
    n_px = out.shape[0]
    n_tx, n_rx, ns_pad = x_pad.shape
    zero = one - one
    lo = -one
    hi = zero + (ns_pad - 2)  # == n_samples in trace coordinates
    n_blocks = (n_px + _PIXEL_BLOCK - 1) // _PIXEL_BLOCK
    for b in prange(n_blocks):
        p_lo = b * _PIXEL_BLOCK
        p_hi = min(p_lo + _PIXEL_BLOCK, n_px)
        n = p_hi - p_lo
        a_buf = np.empty(n, dtype=out.dtype)
        k0_buf = np.empty(n, dtype=np.int32)
        k1_buf = np.empty(n, dtype=np.int32)
        for e in range(n_tx):
            tx_row = tx_rows[te_idx[e]]
            t0e = t0_smp[e]
            for j in range(n_rx):
                m = rx_map[e, j]
                d_row = d_rx[m]
                w_row = weights[m]
                x_row = x_pad[e, j]
                if nearest:
                    for i in range(n):
                        p = p_lo + i
                        t = (tx_row[p] + d_row[p]) - t0e
                        kf = np.floor(t + half)
                        k0_buf[i] = np.int32(min(max(kf, lo), hi) + one)
                    if uniform:
                        for i in range(n):
                            out[p_lo + i] += x_row[k0_buf[i]]
                    else:
                        for i in range(n):
                            p = p_lo + i
                            out[p] += w_row[p] * x_row[k0_buf[i]]
                else:
                    for i in range(n):
                        p = p_lo + i
                        t = (tx_row[p] + d_row[p]) - t0e
                        k0f = np.floor(t)
                        a_buf[i] = t - k0f
                        k0_buf[i] = np.int32(min(max(k0f, lo), hi) + one)
                        k1_buf[i] = np.int32(min(max(k0f + one, lo), hi) + one)
                    if uniform:
                        for i in range(n):
                            p = p_lo + i
                            a = a_buf[i]
                            acc = out[p] + (one - a) * x_row[k0_buf[i]]
                            out[p] = acc + a * x_row[k1_buf[i]]
                    else:
                        for i in range(n):
                            p = p_lo + i
                            a = a_buf[i]
                            w = w_row[p]
                            acc = out[p] + (w * (one - a)) * x_row[k0_buf[i]]
                            out[p] = acc + (w * a) * x_row[k1_buf[i]]


def _pw_trig(ctx: AcquisitionContext) -> tuple[np.ndarray, np.ndarray]:
    angles = np.asarray(ctx.tx_scheme.angles_rad, dtype=np.float64)
    return np.cos(angles), np.sin(angles)


class DasPlan:
    """Precomputed delay/weight tables for one (ctx, grid, apod, dtype, n_rx).

    Building the tables costs about as much as beamforming a few channels,
    so callers that process many frames of identical geometry (benchmarks,
    dataset reconstruction) should build one plan and pass it to every
    :func:`das_beamform` call.  A plan is immutable and thread-safe.
    """

    def __init__(self, ctx: AcquisitionContext, grid: ImageGrid,
                 apod: ApodizationSpec, dtype, n_rx: int):
        dtype = np.dtype(dtype)
        c = dtype.type(ctx.speed_of_sound)
        fs = dtype.type(ctx.sampling_frequency)
        px = np.repeat(grid.x_positions[None, :], grid.n_z, axis=0).ravel()
        pz = np.repeat(grid.z_positions[:, None], grid.n_x, axis=1).ravel()
        elem_x = ctx.element_positions()
        dx = (elem_x[:, None] - px[None, :]).astype(dtype)
        pzd = pz.astype(dtype)
        # per-path delay in sample units: fs * (distance / c), one rounding
        # per operator (mirrored by the oracle)
        self.d_rx = fs * (np.sqrt(dx * dx + pzd[None, :] * pzd[None, :]) / c)
        self.weights = aperture_weight_table(ctx, px, pz, apod).astype(dtype)
        if ctx.is_pw:
            ca, sa = _pw_trig(ctx)
            ca = ca.astype(dtype)
            sa = sa.astype(dtype)
            pxd = px.astype(dtype)
            d_tx = pzd[None, :] * ca[:, None] + pxd[None, :] * sa[:, None]
            self.tx_rows = fs * (d_tx / c)
            self.te_idx = np.arange(ctx.n_tx, dtype=np.int64)
        else:
            self.tx_rows = self.d_rx
            self.te_idx = np.asarray(ctx.tx_scheme.tx_elements, dtype=np.int64)
        self.rx_map = np.ascontiguousarray(ctx.channel_elements(n_rx))
        self.t0_smp = fs * ctx.time_zero_offset.astype(dtype)
        self.uniform = apod.window == "rectangular" and apod.f_number == 0.0
        self.ctx = ctx
        self.grid = grid
        self.apod = apod
        self.dtype = dtype
        self.n_rx = n_rx

    def matches(self, ctx, grid, apod, dtype, n_rx) -> bool:
        return (
            self.ctx is ctx
            and self.grid is grid
            and self.apod == apod
            and self.dtype == dtype
            and self.n_rx == n_rx
        )


def das_beamform(
    frame: RfFrame,
    ctx: AcquisitionContext,
    grid: ImageGrid,
    apod: ApodizationSpec = ApodizationSpec(),
    interp: str = "linear",
    n_threads: int | None = None,
    plan: DasPlan | None = None,
) -> BmodeImage:
    """Delay-and-Sum the frame onto the grid; returns an rf-stage image.

    Computation runs in the frame's dtype.  ``n_threads`` caps the worker
    count for this call; the output is bitwise identical for any value.
    Pass a :class:`DasPlan` to amortize table construction across frames
    that share the same context and grid objects.
    """
    if interp not in INTERPOLATION_MODES:
        raise InvalidMetadata("interp", f"must be one of {INTERPOLATION_MODES}")
    validate_pair(frame, ctx)
    dtype = frame.dtype
    if plan is None or not plan.matches(ctx, grid, apod, dtype, frame.n_rx):
        plan = DasPlan(ctx, grid, apod, dtype, frame.n_rx)
    out = np.zeros(grid.n_z * grid.n_x, dtype=dtype)

    n_tx, n_rx, n_samples = frame.data.shape
    x_pad = np.zeros((n_tx, n_rx, n_samples + 2), dtype=dtype)
    x_pad[:, :, 1:-1] = frame.data

    old_threads = numba.get_num_threads()
    if n_threads is not None:
        numba.set_num_threads(max(1, min(n_threads, old_threads)))
    try:
        _das_kernel(
            x_pad,
            plan.tx_rows,
            plan.te_idx,
            plan.d_rx,
            plan.weights,
            plan.rx_map,
            plan.t0_smp,
            dtype.type(0.5),
            dtype.type(1.0),
            interp == "nearest",
            plan.uniform,
            out,
        )
    finally:
        numba.set_num_threads(old_threads)
    return BmodeImage(out.reshape(grid.shape), stage="rf", grid=grid)


def das_beamform_oracle(
    frame: RfFrame,
    ctx: AcquisitionContext,
    grid: ImageGrid,
    apod: ApodizationSpec = ApodizationSpec(),
    interp: str = "linear",
) -> BmodeImage:
    """Reference DAS: unoptimized triple loop, f64 accumulation, same
    fixed summation order as :func:`das_beamform`.  Intended for small
    instances."""
    if interp not in INTERPOLATION_MODES:
        raise InvalidMetadata("interp", f"must be one of {INTERPOLATION_MODES}")
    validate_pair(frame, ctx)
    elem_x = ctx.element_positions()
    rx_map = ctx.channel_elements(frame.n_rx)
    t0 = ctx.time_zero_offset
    c = ctx.speed_of_sound
    fs = ctx.sampling_frequency
    n_tx, n_rx, n_samples = frame.data.shape
    x = frame.data.astype(np.float64)
    if ctx.is_pw:
        ca, sa = _pw_trig(ctx)
    tx_elements = None if ctx.is_pw else ctx.tx_scheme.tx_elements

    out = np.zeros(grid.shape, dtype=np.float64)
    for iz, pz in enumerate(grid.z_positions):
        for ix, px in enumerate(grid.x_positions):
            w_elem = active_aperture(ctx, (px, pz), apod)
            acc = 0.0
            for e in range(n_tx):
                if ctx.is_pw:
                    d_tx = pz * ca[e] + px * sa[e]
                else:
                    dx_t = elem_x[tx_elements[e]] - px
                    d_tx = math.sqrt(dx_t * dx_t + pz * pz)
                tx_smp = fs * (d_tx / c)
                t0_smp = fs * t0[e]
                for j in range(n_rx):
                    m = rx_map[e, j]
                    dx_r = elem_x[m] - px
                    d_rx = math.sqrt(dx_r * dx_r + pz * pz)
                    t = (tx_smp + fs * (d_rx / c)) - t0_smp
                    w = w_elem[m]
                    if interp == "nearest":
                        k = int(math.floor(t + 0.5))
                        if 0 <= k < n_samples:
                            acc += w * x[e, j, k]
                    else:
                        k0f = math.floor(t)
                        k0 = int(k0f)
                        a = t - k0f
                        if 0 <= k0 < n_samples:
                            acc += (w * (1.0 - a)) * x[e, j, k0]
                        if 0 <= k0 + 1 < n_samples:
                            acc += (w * a) * x[e, j, k0 + 1]
            out[iz, ix] = acc
    if frame.dtype == np.float32:
        out = out.astype(np.float32)
    return BmodeImage(out, stage="rf", grid=grid)
