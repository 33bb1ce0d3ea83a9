import numpy as np
import pytest

import spamri as sp
from spamri.grid import KSPACE

from conftest import random_grid, random_mask, unit_coil


def test_fft2c_impulse_is_flat():
    x = np.zeros((1, 8, 8), dtype=complex)
    x[0, 4, 4] = 1.0  # centered impulse
    k = sp.fft2c(x)
    np.testing.assert_allclose(k, np.full((1, 8, 8), 1.0 / 8.0), atol=1e-12)


def test_fft2c_unitary(rng):
    x = rng.standard_normal((2, 16, 16)) + 1j * rng.standard_normal((2, 16, 16))
    assert np.linalg.norm(sp.fft2c(x)) == pytest.approx(np.linalg.norm(x), rel=1e-12)
    np.testing.assert_allclose(sp.ifft2c(sp.fft2c(x)), x, atol=1e-12)


def test_fft2c_dc_at_center(rng):
    x = np.ones((1, 8, 8), dtype=complex)
    k = sp.fft2c(x)
    assert abs(k[0, 4, 4]) == pytest.approx(8.0)
    k0 = k.copy()
    k0[0, 4, 4] = 0
    np.testing.assert_allclose(k0, 0, atol=1e-12)


def test_coil_maps_normalized_and_deterministic():
    c1 = sp.gen_coil_maps(4, 24, 20, seed=5)
    c2 = sp.gen_coil_maps(4, 24, 20, seed=5)
    np.testing.assert_array_equal(c1.maps, c2.maps)
    ssq = np.sum(np.abs(c1.maps) ** 2, axis=0)
    np.testing.assert_allclose(ssq, 1.0, atol=1e-12)
    assert c1.n_coils == 4


def test_coil_maps_validation():
    with pytest.raises(ValueError, match="normalized"):
        sp.CoilSensitivities(2.0 * np.ones((1, 4, 4), dtype=complex))
    with pytest.raises(ValueError):
        sp.gen_coil_maps(0, 8, 8, 0)


def test_kspace_data_enforces_mask(rng):
    m = random_mask(rng, 8, 8)
    full = rng.standard_normal((1, 1, 8, 8)) + 1j * rng.standard_normal((1, 1, 8, 8))
    y = sp.KSpaceData(full, m)
    np.testing.assert_array_equal(y.data[..., ~m.keep], 0)
    np.testing.assert_array_equal(y.data[..., m.keep], full[..., m.keep])


def test_operator_shape_mismatch(rng):
    m = random_mask(rng, 8, 8)
    with pytest.raises(ValueError):
        sp.EncodingOperator(m, unit_coil(16, 16))


def test_forward_rejects_kspace_input(rng):
    m = random_mask(rng, 8, 8)
    op = sp.EncodingOperator(m, unit_coil(8, 8))
    g = sp.ComplexGrid(rng.standard_normal((1, 8, 8)) + 0j, KSPACE)
    with pytest.raises(ValueError):
        sp.forward(op, g)


def test_forward_single_unit_coil_is_masked_fft(rng):
    m = random_mask(rng, 8, 8)
    op = sp.EncodingOperator(m, unit_coil(8, 8))
    x = random_grid(rng, h=8, w=8)
    y = sp.forward(op, x)
    np.testing.assert_allclose(y.data[0], sp.fft2c(x.data) * m.keep, atol=1e-12)


def test_adjoint_identity(rng):
    """<Ax, y> == <x, A^T y> for random multi-coil instances."""
    for _ in range(20):
        coils = sp.gen_coil_maps(4, 16, 16, int(rng.integers(1 << 30)))
        m = random_mask(rng)
        op = sp.EncodingOperator(m, coils)
        x = random_grid(rng)
        y = sp.KSpaceData(
            rng.standard_normal((4, 1, 16, 16)) + 1j * rng.standard_normal((4, 1, 16, 16)), m
        )
        lhs = np.vdot(sp.forward(op, x).data, y.data)
        rhs = np.vdot(x.data, sp.adjoint(op, y).data)
        assert abs(lhs - rhs) / abs(lhs) < 1e-10


def test_partial_isometry_single_coil(rng):
    # with a unit coil and any mask, A A^T acts as identity on masked k-space
    m = random_mask(rng, 8, 8)
    op = sp.EncodingOperator(m, unit_coil(8, 8))
    y = sp.KSpaceData(rng.standard_normal((1, 1, 8, 8)) + 0j, m)
    back = sp.forward(op, sp.adjoint(op, y))
    np.testing.assert_allclose(back.data, y.data, atol=1e-12)


def test_zero_filled_fully_sampled_recovers(rng):
    m = sp.SamplingMask(np.ones((16, 16), dtype=bool))
    coils = sp.gen_coil_maps(3, 16, 16, 0)
    op = sp.EncodingOperator(m, coils)
    x = random_grid(rng)
    back = sp.zero_filled(op, sp.forward(op, x))
    np.testing.assert_allclose(back.data, x.data, atol=1e-10)
