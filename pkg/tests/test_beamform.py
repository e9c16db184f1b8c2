import numpy as np
import pytest

from echopipe.beamform import (
    DasPlan,
    active_aperture,
    das_beamform,
    das_beamform_oracle,
    hann_weight_table,
)
from echopipe.errors import InvalidMetadata
from echopipe.types import (
    AcquisitionContext,
    ApodizationSpec,
    ImageGrid,
    PwScheme,
    RfFrame,
    StaScheme,
    centered_rx_map,
    default_grid,
)

C = 1540.0
FS = 40e6


def sta_ctx(n=8, **kw):
    defaults = dict(
        speed_of_sound=C, sampling_frequency=FS, n_elements=n, pitch=2e-4,
        tx_scheme=StaScheme(tuple(range(n))),
    )
    defaults.update(kw)
    return AcquisitionContext(**defaults)


def small_grid():
    return ImageGrid(np.linspace(-1e-3, 1e-3, 12), np.linspace(1e-4, 8e-3, 12))


def test_zero_frame_gives_zero_image():
    ctx = sta_ctx(4)
    frame = RfFrame(np.zeros((4, 4, 128)))
    img = das_beamform(frame, ctx, small_grid())
    assert img.stage == "rf"
    np.testing.assert_array_equal(img.data, 0.0)


def test_single_element_impulse_lands_on_exact_depth_row():
    # one element at x = 0; unit impulse at sample k; the on-axis pixel at
    # depth z = k c / (2 fs) reads back exactly 1 in nearest mode and every
    # other native-depth row reads 0
    k = 100
    ctx = sta_ctx(n=1)
    data = np.zeros((1, 1, 256))
    data[0, 0, k] = 1.0
    frame = RfFrame(data)
    grid = default_grid(ctx, 256, "sta")  # native rows: z_j = j c / (2 fs)
    img = das_beamform(frame, ctx, grid, interp="nearest")
    assert img.shape == (256, 1)
    expected = np.zeros(256)
    expected[k] = 1.0
    np.testing.assert_array_equal(img.data[:, 0], expected)


def test_pw_broadside_impulse_matches_sta_index_arithmetic():
    # alpha = 0 above element j: tau = 2 z / c, the same index arithmetic
    k = 64
    n = 4
    ctx = AcquisitionContext(
        speed_of_sound=C, sampling_frequency=FS, n_elements=n, pitch=3e-4,
        tx_scheme=PwScheme((0.0,)),
    )
    j = 2
    data = np.zeros((1, n, 128))
    data[0, j, k] = 1.0
    frame = RfFrame(data)
    z = k * C / (2 * FS)
    grid = ImageGrid(np.array([ctx.element_positions()[j]]), np.array([z]))
    img = das_beamform(frame, ctx, grid, interp="nearest")
    assert img.data[0, 0] == 1.0


def test_paper_sta_shapes():
    tx = tuple(range(128))
    ctx = sta_ctx(n=128, rx_channel_map=centered_rx_map(128, 64, tx))
    frame = RfFrame(np.zeros((128, 64, 2048), dtype=np.float32))
    grid = default_grid(ctx, 2048, "sta")
    img = das_beamform(frame, ctx, grid)
    assert img.shape == (2048, 128)


def test_linearity_within_tolerance():
    rng = np.random.default_rng(1)
    ctx = sta_ctx(4)
    f1 = rng.normal(size=(4, 4, 128))
    f2 = rng.normal(size=(4, 4, 128))
    grid = small_grid()
    a = das_beamform(RfFrame(f1 + f2), ctx, grid).data
    b = das_beamform(RfFrame(f1), ctx, grid).data + das_beamform(RfFrame(f2), ctx, grid).data
    scale = np.abs(b).max()
    np.testing.assert_allclose(a, b, atol=1e-12 * scale)


def test_scaling_equivariance_exact_for_power_of_two():
    rng = np.random.default_rng(2)
    ctx = sta_ctx(4)
    f = rng.normal(size=(4, 4, 128))
    grid = small_grid()
    np.testing.assert_array_equal(
        das_beamform(RfFrame(2.0 * f), ctx, grid).data,
        2.0 * das_beamform(RfFrame(f), ctx, grid).data,
    )


@pytest.mark.parametrize("interp", ["nearest", "linear"])
def test_out_of_range_contributes_zero(interp):
    # time-zero offset large enough to push every delay past the trace end
    ctx = sta_ctx(2, time_zero_offset=-1.0)
    rng = np.random.default_rng(3)
    frame = RfFrame(rng.normal(size=(2, 2, 64)))
    img = das_beamform(frame, ctx, small_grid(), interp=interp)
    np.testing.assert_array_equal(img.data, 0.0)


def test_invalid_interp_rejected():
    ctx = sta_ctx(2)
    frame = RfFrame(np.zeros((2, 2, 16)))
    with pytest.raises(InvalidMetadata):
        das_beamform(frame, ctx, small_grid(), interp="cubic")


@pytest.mark.parametrize("interp", ["nearest", "linear"])
@pytest.mark.parametrize("window,f_number", [("rectangular", 0.0), ("hann", 1.0)])
def test_oracle_equivalence_bitwise_f64(interp, window, f_number):
    rng = np.random.default_rng(4)
    ctx = sta_ctx(6, time_zero_offset=rng.normal(scale=1e-7, size=6))
    frame = RfFrame(rng.normal(size=(6, 6, 96)))
    grid = small_grid()
    apod = ApodizationSpec(window=window, f_number=f_number)
    fast = das_beamform(frame, ctx, grid, apod, interp=interp)
    slow = das_beamform_oracle(frame, ctx, grid, apod, interp=interp)
    assert fast.data.tobytes() == slow.data.tobytes()


def test_pw_oracle_equivalence_bitwise_f64():
    rng = np.random.default_rng(5)
    ctx = AcquisitionContext(
        speed_of_sound=C, sampling_frequency=20e6, n_elements=5, pitch=3e-4,
        tx_scheme=PwScheme(tuple(np.deg2rad([-8.0, 1.0, 12.0]))),
    )
    frame = RfFrame(rng.normal(size=(3, 5, 128)))
    fast = das_beamform(frame, ctx, small_grid(), interp="linear")
    slow = das_beamform_oracle(frame, ctx, small_grid(), interp="linear")
    assert fast.data.tobytes() == slow.data.tobytes()


def test_thread_count_does_not_change_bits():
    rng = np.random.default_rng(6)
    tx = tuple(range(16))
    ctx = sta_ctx(16)
    frame = RfFrame(rng.normal(size=(16, 16, 256)).astype(np.float32))
    grid = default_grid(ctx, 256, "sta")
    img1 = das_beamform(frame, ctx, grid, n_threads=1)
    img2 = das_beamform(frame, ctx, grid, n_threads=2)
    assert img1.data.tobytes() == img2.data.tobytes()


def test_plan_reuse_matches_fresh_tables():
    rng = np.random.default_rng(7)
    ctx = sta_ctx(4)
    grid = small_grid()
    apod = ApodizationSpec()
    plan = DasPlan(ctx, grid, apod, np.float64, 4)
    for _ in range(2):
        frame = RfFrame(rng.normal(size=(4, 4, 128)))
        with_plan = das_beamform(frame, ctx, grid, apod, plan=plan)
        fresh = das_beamform(frame, ctx, grid, apod)
        assert with_plan.data.tobytes() == fresh.data.tobytes()


def test_active_aperture_full_when_f_number_zero():
    ctx = sta_ctx(8)
    w = active_aperture(ctx, (0.0, 5e-3), ApodizationSpec())
    np.testing.assert_array_equal(w, np.ones(8))


def test_active_aperture_gate_width():
    # z / (2 F) = 0.02 / 4 = 5 mm half-width
    ctx = sta_ctx(64)
    apod = ApodizationSpec(window="rectangular", f_number=2.0)
    x_pix, z_pix = 1e-3, 0.02
    w = active_aperture(ctx, (x_pix, z_pix), apod)
    expected = (np.abs(ctx.element_positions() - x_pix) <= 0.005).astype(float)
    np.testing.assert_array_equal(w, expected)


def test_active_aperture_hann_endpoints():
    # exactly 3 active elements: hann weights are [0, 1, 0]
    ctx = sta_ctx(8, pitch=1e-3)
    apod = ApodizationSpec(window="hann", f_number=2.0)
    z = 2 * 1.2e-3 * 2.0  # half-width 1.2 mm -> one neighbor each side
    x = ctx.element_positions()[4]
    w = active_aperture(ctx, (x, z), apod)
    active = np.nonzero(w > 0)[0]
    np.testing.assert_array_equal(np.nonzero(np.abs(ctx.element_positions() - x) <= 1.2e-3)[0], [3, 4, 5])
    np.testing.assert_array_equal(w[[3, 5]], 0.0)
    assert w[4] == 1.0
    assert active.size == 1  # endpoints carry zero weight


def test_hann_weight_table_rows():
    tab = hann_weight_table(4)
    np.testing.assert_array_equal(tab[1, :1], [1.0])
    np.testing.assert_allclose(tab[3, :3], [0.0, 1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(tab[4, :4], 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(4) / 3))


def test_f32_close_to_f64():
    rng = np.random.default_rng(8)
    ctx = sta_ctx(4)
    data = rng.normal(size=(4, 4, 128))
    grid = small_grid()
    img64 = das_beamform(RfFrame(data), ctx, grid).data
    img32 = das_beamform(RfFrame(data.astype(np.float32)), ctx, grid).data
    scale = np.abs(img64).max()
    np.testing.assert_allclose(img32, img64, atol=5e-4 * scale)
