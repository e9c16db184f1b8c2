import numpy as np
import pytest

from echopipe.errors import (
    AllZeroInput,
    AxisTooShort,
    EmptyCoefficients,
    NonPositiveRange,
)
from echopipe.sigproc import (
    FirSpec,
    analytic_signal,
    dynamic_adjustment,
    envelope,
    fir_filter,
)


def test_fir_impulse_response_equals_coefficients():
    y = fir_filter(np.array([1.0, 0.0, 0.0, 0.0]), FirSpec([0.5, 0.5]))
    np.testing.assert_array_equal(y, [0.5, 0.5, 0.0, 0.0])


def test_fir_identity():
    x = np.random.default_rng(0).normal(size=(3, 17))
    np.testing.assert_array_equal(fir_filter(x, FirSpec([1.0])), x)


def test_fir_hand_convolution():
    y = fir_filter(np.array([1.0, 2.0, 3.0]), FirSpec([1.0, 1.0]))
    np.testing.assert_allclose(y, [1.0, 3.0, 5.0])


def test_fir_along_chosen_axis():
    x = np.zeros((4, 3))
    x[0] = 1.0
    y = fir_filter(x, FirSpec([1.0, -1.0]), axis=0)
    np.testing.assert_allclose(y[0], 1.0)
    np.testing.assert_allclose(y[1], -1.0)
    np.testing.assert_allclose(y[2:], 0.0)


def test_fir_linearity_and_shift():
    rng = np.random.default_rng(3)
    spec = FirSpec(rng.normal(size=5))
    x1, x2 = rng.normal(size=64), rng.normal(size=64)
    np.testing.assert_allclose(
        fir_filter(x1 + 2.0 * x2, spec),
        fir_filter(x1, spec) + 2.0 * fir_filter(x2, spec),
        rtol=1e-12,
    )
    # shifting the input shifts the output (zero-padded boundary aside)
    shifted = np.concatenate([[0.0], x1[:-1]])
    np.testing.assert_allclose(fir_filter(shifted, spec)[1:], fir_filter(x1, spec)[:-1])


def test_fir_rejects_empty_or_nan_taps():
    with pytest.raises(EmptyCoefficients):
        FirSpec([])
    with pytest.raises(EmptyCoefficients):
        FirSpec([np.nan])


def test_analytic_signal_four_point_cosine():
    z = analytic_signal(np.array([1.0, 0.0, -1.0, 0.0]))
    np.testing.assert_allclose(z, np.array([1, 1j, -1, -1j]), atol=1e-9)
    np.testing.assert_allclose(envelope(z), np.ones(4), atol=1e-9)


def test_analytic_signal_constant_passes_unchanged():
    x = np.full(16, 3.25)
    z = analytic_signal(x)
    np.testing.assert_allclose(z.real, x, atol=1e-12)
    np.testing.assert_allclose(z.imag, 0.0, atol=1e-12)


def test_analytic_signal_hilbert_pair_at_exact_bin():
    n = np.arange(64)
    x = np.sin(2 * np.pi * 5 * n / 64)
    z = analytic_signal(x)
    np.testing.assert_allclose(z.imag, -np.cos(2 * np.pi * 5 * n / 64), atol=1e-9)


def test_analytic_signal_real_part_identity():
    rng = np.random.default_rng(11)
    for n in (8, 9, 33, 256):  # even and odd lengths
        x = rng.normal(size=n)
        z = analytic_signal(x)
        np.testing.assert_allclose(z.real, x, rtol=0, atol=1e-9 * np.abs(x).max())


def test_analytic_signal_lanes_along_axis():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(6, 32))
    z0 = analytic_signal(x, axis=1)
    for lane in range(6):
        np.testing.assert_allclose(
            z0[lane], analytic_signal(x[lane]), atol=1e-12
        )


def test_analytic_signal_axis_too_short():
    with pytest.raises(AxisTooShort):
        analytic_signal(np.array([1.0]))


def test_envelope_values():
    z = np.array([3 + 4j, 0.0 + 0j])
    np.testing.assert_array_equal(envelope(z), [5.0, 0.0])


def test_envelope_phase_invariance():
    n = np.arange(128)
    envs = []
    for phase in (0.0, 0.7, 1.9, np.pi / 2):
        x = np.cos(2 * np.pi * 8 * n / 128 + phase)
        envs.append(envelope(analytic_signal(x)))
    for e in envs[1:]:
        np.testing.assert_allclose(e, envs[0], atol=1e-6)


def test_dynamic_adjustment_hand_case():
    out = dynamic_adjustment(np.array([1.0, 0.1, 0.01]), 30.0)
    np.testing.assert_allclose(out, [1.0, 1.0 / 3.0, 0.0], atol=1e-12)


def test_dynamic_adjustment_constant_maps_to_one():
    np.testing.assert_array_equal(
        dynamic_adjustment(np.full((3, 3), 0.42), 30.0), np.ones((3, 3))
    )


def test_dynamic_adjustment_clamp_floor():
    out = dynamic_adjustment(np.array([1.0, 10.0**-1.5]), 30.0)
    np.testing.assert_array_equal(out, [1.0, 0.0])


def test_dynamic_adjustment_zero_elements_map_to_zero():
    out = dynamic_adjustment(np.array([2.0, 0.0]), 30.0)
    assert out[0] == 1.0 and out[1] == 0.0


def test_dynamic_adjustment_monotone_and_scale_invariant():
    rng = np.random.default_rng(7)
    e = np.sort(rng.random(100)) + 1e-6
    out = dynamic_adjustment(e, 40.0)
    assert np.all(np.diff(out) >= 0)
    assert out.min() >= 0.0 and out.max() == 1.0
    np.testing.assert_allclose(out, dynamic_adjustment(137.0 * e, 40.0), atol=1e-12)


def test_dynamic_adjustment_argmax_exactly_one():
    rng = np.random.default_rng(9)
    e = rng.random((20, 20))
    out = dynamic_adjustment(e, 25.0)
    assert out.flat[e.argmax()] == 1.0


def test_dynamic_adjustment_errors():
    with pytest.raises(AllZeroInput):
        dynamic_adjustment(np.zeros(4), 30.0)
    with pytest.raises(NonPositiveRange):
        dynamic_adjustment(np.ones(4), 0.0)
