import numpy as np
import pytest

from echopipe.errors import DimensionMismatch, InvalidMetadata
from echopipe.types import (
    AcquisitionContext,
    ApodizationSpec,
    BmodeImage,
    ImageGrid,
    PwScheme,
    RfFrame,
    StaScheme,
    centered_rx_map,
    default_grid,
    validate_pair,
)


def sta_ctx(n_elements=8, n_tx=None, **kw):
    tx = tuple(range(n_tx if n_tx is not None else n_elements))
    defaults = dict(
        speed_of_sound=1540.0,
        sampling_frequency=40e6,
        n_elements=n_elements,
        pitch=2e-4,
        tx_scheme=StaScheme(tx),
    )
    defaults.update(kw)
    return AcquisitionContext(**defaults)


def test_rf_frame_validation():
    frame = RfFrame(np.zeros((2, 3, 4)))
    assert frame.n_tx == 2 and frame.n_rx == 3 and frame.n_samples == 4
    with pytest.raises(DimensionMismatch):
        RfFrame(np.zeros((2, 3)))
    with pytest.raises(InvalidMetadata):
        RfFrame(np.full((1, 1, 2), np.nan))
    with pytest.raises(InvalidMetadata):
        RfFrame(np.zeros((1, 1, 2), dtype=np.int32))


def test_rf_frame_immutable():
    frame = RfFrame(np.zeros((1, 1, 4)))
    with pytest.raises(ValueError):
        frame.data[0, 0, 0] = 1.0


def test_context_field_validation():
    with pytest.raises(InvalidMetadata):
        sta_ctx(speed_of_sound=-1.0)
    with pytest.raises(InvalidMetadata):
        sta_ctx(sampling_frequency=0.0)
    with pytest.raises(InvalidMetadata):
        sta_ctx(pitch=0.0)
    with pytest.raises(InvalidMetadata):
        AcquisitionContext(
            speed_of_sound=1540.0, sampling_frequency=40e6, n_elements=4,
            pitch=2e-4, tx_scheme=StaScheme((0, 5)),
        )
    with pytest.raises(InvalidMetadata):
        PwScheme((np.pi / 2,))


def test_element_positions_symmetric():
    for n in (1, 2, 7, 64, 128):
        ctx = sta_ctx(n_elements=n)
        x = ctx.element_positions()
        assert abs(x.sum()) < 1e-15 * max(n, 1)
        if n > 1:
            np.testing.assert_allclose(np.diff(x), ctx.pitch)


def test_time_zero_broadcast_and_length_check():
    ctx = sta_ctx(n_elements=4, time_zero_offset=1e-6)
    np.testing.assert_array_equal(ctx.time_zero_offset, np.full(4, 1e-6))
    with pytest.raises(InvalidMetadata):
        sta_ctx(n_elements=4, time_zero_offset=np.zeros(3))


def test_validate_pair_paper_sta_shape():
    # 128 single-element transmits recorded on 64 channels of a 128-element array
    tx = tuple(range(128))
    ctx = sta_ctx(
        n_elements=128, rx_channel_map=centered_rx_map(128, 64, tx)
    )
    frame = RfFrame(np.zeros((128, 64, 2048), dtype=np.float32))
    assert validate_pair(frame, ctx) == (frame, ctx)


def test_validate_pair_paper_pw_shape():
    angles = tuple(np.deg2rad(np.arange(-10, 11, 2)))
    ctx = AcquisitionContext(
        speed_of_sound=1540.0, sampling_frequency=40e6, n_elements=192,
        pitch=2e-4, tx_scheme=PwScheme(angles),
    )
    frame = RfFrame(np.zeros((11, 192, 2048), dtype=np.float32))
    validate_pair(frame, ctx)


def test_validate_pair_tx_mismatch():
    ctx = sta_ctx(n_elements=8, n_tx=3)
    frame = RfFrame(np.zeros((4, 8, 64)))
    with pytest.raises(DimensionMismatch) as err:
        validate_pair(frame, ctx)
    assert err.value.axis == 0


def test_validate_pair_needs_explicit_map():
    # identity map is only implied when n_rx == n_elements
    ctx = sta_ctx(n_elements=8)
    with pytest.raises(InvalidMetadata):
        validate_pair(RfFrame(np.zeros((8, 4, 16))), ctx)


def test_rx_channel_map_bounds():
    with pytest.raises(InvalidMetadata):
        sta_ctx(n_elements=4, rx_channel_map=np.full((4, 2), 7))


def test_centered_rx_map_clipping():
    m = centered_rx_map(8, 4, (0, 3, 7))
    np.testing.assert_array_equal(m[0], [0, 1, 2, 3])  # clipped at left edge
    np.testing.assert_array_equal(m[1], [1, 2, 3, 4])  # centered
    np.testing.assert_array_equal(m[2], [4, 5, 6, 7])  # clipped at right edge


def test_default_grid_sta_paper_shape():
    tx = tuple(range(128))
    ctx = sta_ctx(n_elements=128, rx_channel_map=centered_rx_map(128, 64, tx))
    grid = default_grid(ctx, 2048, "sta")
    assert grid.shape == (2048, 128)
    dz = ctx.speed_of_sound / (2 * ctx.sampling_frequency)
    np.testing.assert_array_equal(grid.z_positions, np.arange(2048) * dz)
    np.testing.assert_allclose(np.diff(grid.z_positions), dz, rtol=1e-12)
    np.testing.assert_array_equal(grid.x_positions, ctx.element_positions())


def test_default_grid_pw_paper_shape():
    angles = tuple(np.deg2rad(np.arange(-10, 11, 2)))
    ctx = AcquisitionContext(
        speed_of_sound=1540.0, sampling_frequency=40e6, n_elements=192,
        pitch=2e-4, tx_scheme=PwScheme(angles),
    )
    grid = default_grid(ctx, 2048, "pw")
    assert grid.shape == (512, 128)
    assert grid.z_positions[0] == 0.0
    z_max = 2048 * ctx.speed_of_sound / (2 * ctx.sampling_frequency)
    assert grid.z_positions[-1] == pytest.approx(z_max)
    assert grid.x_positions[0] == ctx.element_positions()[0]
    assert grid.x_positions[-1] == ctx.element_positions()[-1]


def test_default_grid_degenerate():
    ctx = sta_ctx(n_elements=1)
    grid = default_grid(ctx, 1, "sta")
    assert grid.shape == (1, 1)
    assert grid.z_positions[0] == 0.0


def test_default_grid_nz_override():
    ctx = sta_ctx(n_elements=4)
    assert default_grid(ctx, 256, "sta", n_z_override=64).n_z == 64
    assert default_grid(ctx, 256, "pw", n_z_override=100).n_z == 100


def test_image_grid_invariants():
    with pytest.raises(InvalidMetadata):
        ImageGrid(np.array([0.0, 0.0]), np.array([0.0, 1.0]))
    with pytest.raises(InvalidMetadata):
        ImageGrid(np.array([0.0, 1.0]), np.array([-1.0, 1.0]))


def test_bmode_image_stage_checks():
    grid = ImageGrid(np.array([0.0, 1e-3]), np.array([0.0, 1e-3]))
    BmodeImage(np.zeros((2, 2)), stage="rf", grid=grid)
    with pytest.raises(InvalidMetadata):
        BmodeImage(np.full((2, 2), -1.0), stage="envelope", grid=grid)
    with pytest.raises(InvalidMetadata):
        BmodeImage(np.full((2, 2), 1.5), stage="display", grid=grid)
    with pytest.raises(InvalidMetadata):
        BmodeImage(np.zeros((2, 2)), stage="complex_analytic", grid=grid)
    with pytest.raises(DimensionMismatch):
        BmodeImage(np.zeros((3, 2)), stage="rf", grid=grid)


def test_apodization_spec_validation():
    ApodizationSpec(window="hann", f_number=1.5)
    with pytest.raises(InvalidMetadata):
        ApodizationSpec(window="tukey")
    with pytest.raises(InvalidMetadata):
        ApodizationSpec(f_number=-1.0)
