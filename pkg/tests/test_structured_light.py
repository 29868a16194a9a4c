import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdvb.errors import EmptyMaskError, WindingUndefinedError
from qdvb.structured_light import (
    LgInputSpec,
    TransverseGrid,
    ellipse_field,
    lg_full_mode,
    lg_input_profile,
    lg_radial,
    peak_ratio,
    phase_winding,
    relative_amplitude,
    stokes,
    vb_classify,
)

GRID = TransverseGrid(101, 101, 3.0)


def test_grid_validation_and_symmetry():
    with pytest.raises(ValueError):
        TransverseGrid(100, 101)
    with pytest.raises(ValueError):
        TransverseGrid(11, 11, 0.0)
    g = TransverseGrid(21, 31, 2.0)
    np.testing.assert_array_equal(g.x, -g.x[::-1])
    np.testing.assert_array_equal(g.y, -g.y[::-1])
    assert g.x[g.nx // 2] == 0 and g.mesh()[0].shape == (31, 21)


def test_lg_spec_validation():
    with pytest.raises(ValueError):
        LgInputSpec(1.0, waist=0)
    with pytest.raises(ValueError):
        LgInputSpec(1.0, oam=0.5)


def test_gaussian_profile_peak_and_decay():
    f = lg_input_profile(LgInputSpec(0.005, 0, 1.0), GRID)
    cy, cx = GRID.center_index()
    assert f[cy, cx] == 0.005
    assert abs(f[cy, cx + 50]) == pytest.approx(0.005 * math.exp(-9.0))


@pytest.mark.parametrize("l", [1, -1, 2, -3])
def test_vortex_profile_dark_core_and_ring(l):
    spec = LgInputSpec(1.0, l, 1.7)
    f = lg_input_profile(spec, GRID)
    cy, cx = GRID.center_index()
    assert f[cy, cx] == 0
    r = np.linspace(0, 3, 3001)
    # ring of (r sqrt2/w)^|l| exp(-r^2/w^2) peaks at r = w sqrt(|l|/2)
    assert r[np.argmax(lg_radial(spec, r))] == pytest.approx(1.7 * math.sqrt(abs(l) / 2), abs=1e-3)


@given(st.integers(-4, 4), st.floats(-math.pi, math.pi))
def test_input_profile_winding(l, theta):
    f = lg_input_profile(LgInputSpec(1.0, l, 1.0, theta), GRID)
    assert phase_winding(f, GRID, 0.9) == l


def test_full_mode_waist_plane():
    r = np.linspace(0, 2, 9)
    k, n, w = 2 * math.pi / 0.92, 3.5, 1.0
    m0 = lg_full_mode(1.0, 2, w, k, n, r, 0.3, 0.0)
    norm = math.sqrt(2 / (math.pi * 2))
    np.testing.assert_allclose(m0, norm * (r * math.sqrt(2)) ** 2 * np.exp(-r**2) * np.exp(0.6j), rtol=1e-14)
    assert lg_full_mode(1.0, 1, w, k, n, 0.0, 0.0, 0.0) == 0


def test_full_mode_gouy_phase():
    k, n, w = 7.0, 1.0, 1.0
    z_r = k * w**2 / 2

    def gouy(z):
        m = lg_full_mode(1.0, 0, w, k, n, 0.0, 0.0, z)
        return -np.angle(m * np.exp(-1j * k * n * z))

    assert gouy(10 * z_r) - gouy(-10 * z_r) == pytest.approx(2 * math.atan(10.0), abs=1e-12)
    assert (gouy(10 * z_r) - gouy(-10 * z_r)) / math.pi == pytest.approx(0.937, abs=1e-3)
    # as written, the envelope carries no 1/w(z) prefactor: on-axis l = 0 magnitude is z independent
    assert abs(lg_full_mode(1.0, 0, w, k, n, 0.0, 0.0, 3 * z_r)) == pytest.approx(math.sqrt(2 / math.pi))


cfield = st.builds(
    lambda a, b, c, d: np.array([[a + 1j * b, c], [d, 1j * a]], dtype=complex),
    *[st.floats(-1e3, 1e3) for _ in range(4)],
)


@given(cfield, cfield)
def test_stokes_closure_property(e_l, e_r):
    s = stokes(e_l, e_r)
    assert s.closure_error() <= 1e-10
    assert np.all(s.S0 >= np.abs(s.S3) - 1e-9 * s.S0.max(initial=0))


def test_stokes_shape_mismatch():
    with pytest.raises(ValueError):
        stokes(np.ones((2, 2)), np.ones((3, 3)))


def test_ellipse_limits():
    one = np.ones((3, 3), dtype=complex)
    ell = ellipse_field(stokes(one, 0 * one))
    np.testing.assert_allclose(ell.chi, math.pi / 4)
    ell = ellipse_field(stokes(0 * one, one))
    np.testing.assert_allclose(ell.chi, -math.pi / 4)
    ell = ellipse_field(stokes(one, one))
    np.testing.assert_allclose(ell.chi, 0, atol=1e-15)
    np.testing.assert_allclose(ell.psi, 0, atol=1e-15)
    ell = ellipse_field(stokes(one, 1j * one))
    np.testing.assert_allclose(ell.psi, math.pi / 4)


def test_ellipse_masks_dark_pixels_and_rejects_empty():
    e = np.zeros((3, 3), dtype=complex)
    e[1, 1] = 1
    ell = ellipse_field(stokes(e, 0 * e))
    assert ell.mask.sum() == 1 and np.isnan(ell.chi[0, 0])
    with pytest.raises(EmptyMaskError):
        ellipse_field(stokes(0 * e, 0 * e))


@pytest.mark.parametrize(
    "l_l,l_r,theta,label",
    [
        (0, 1, 0.0, "lemon"),
        (0, -1, 0.0, "star"),
        (0, -3, 0.0, "web"),
        (-1, 1, 0.0, "radial"),
        (-1, 1, math.pi, "azimuthal"),
        (-1, 1, -math.pi, "azimuthal"),
        (-1, 1, math.pi / 2, "spiral"),
        (-1, 1, 1.0, "other"),
        (0, 2, 0.0, "other"),
        (1, 1, 0.0, "other"),
    ],
)
def test_vb_classify(l_l, l_r, theta, label):
    one = np.ones((2, 2))
    assert vb_classify(one, one, l_l, l_r, theta) == label


def test_vb_classify_dark_component_is_other():
    one = np.ones((2, 2))
    assert vb_classify(one, 0 * one, 0, 1, 0.0) == "other"


def test_peak_ratio_and_relative_amplitude():
    a = np.array([1.0, 2.0])
    assert peak_ratio(a, a / 2) == pytest.approx(4.0)
    assert relative_amplitude(a, a) == pytest.approx(math.pi / 4)
    assert peak_ratio(a, 0 * a) == math.inf


def test_winding_undefined_on_dark_ring():
    f = lg_input_profile(LgInputSpec(1.0, 1, 0.3), GRID)
    with pytest.raises(WindingUndefinedError):
        phase_winding(f, GRID, 2.9)
