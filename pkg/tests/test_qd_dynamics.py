import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import null_space

from qdvb.errors import SteadyStateAmbiguityError
from qdvb.phonon_bath import BathArtifacts, PhononBath
from qdvb.qd_dynamics import (
    TRACE_ROW,
    FieldPoint,
    QdParams,
    assemble_liouvillian,
    build_drive_operators,
    build_hamiltonian,
    build_lindblad,
    build_phonon_tcl,
    coherences,
    coherent_part,
    density_matrix_errors,
    liouvillian_batch,
    liouvillian_from_json,
    liouvillian_to_json,
    sandwich,
    spost,
    spre,
    steady_state,
    time_evolve,
    unvec,
    vec,
)

P = QdParams()
GAMMA2 = P.gamma1 / 2 + P.gamma_d / 2

amp = st.floats(0, 0.05)
phase = st.floats(-np.pi, np.pi)
cplx = st.builds(lambda a, p: a * np.exp(1j * p), amp, phase)
fields_st = st.builds(FieldPoint, cplx, cplx, cplx, cplx)

_ART5 = BathArtifacts.build(PhononBath(temperature=5.0))
_ART_OFF = BathArtifacts.build(PhononBath(enabled=False), n_points=101)


def _rand_c(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def test_vectorization_identity(rng):
    a, b, rho = (_rand_c(rng, (4, 4)) for _ in range(3))
    np.testing.assert_allclose(sandwich(a, b) @ vec(rho), vec(a @ rho @ b), atol=1e-12)
    np.testing.assert_allclose(spre(a) @ vec(rho), vec(a @ rho), atol=1e-12)
    np.testing.assert_allclose(spost(b) @ vec(rho), vec(rho @ b), atol=1e-12)
    np.testing.assert_array_equal(unvec(vec(rho)), rho)
    # column-major: vec index 1 is element (x, g)
    assert vec(rho)[1] == rho[1, 0]


def test_hamiltonian_renormalized_coupling():
    h = build_hamiltonian(P, FieldPoint(0.005, 0, 0, 0), 0.90)
    assert h[1, 0] == pytest.approx(0.0045, abs=1e-15)
    assert np.allclose(h, h.conj().T)


def test_hamiltonian_detunings():
    h = build_hamiltonian(QdParams(delta_p=0.3, delta_c=-0.1), FieldPoint(0, 0, 0, 0), 1.0)
    np.testing.assert_allclose(np.diag(h).real, [0, -0.3, -0.3, -0.2], atol=1e-15)


@given(fields_st)
def test_system_operators_hermitian(f):
    x_g, x_u = build_drive_operators(f)
    assert np.allclose(x_g, x_g.conj().T)
    assert np.allclose(x_u, x_u.conj().T)


def test_lindblad_trace_preserving():
    assert np.max(np.abs(TRACE_ROW @ build_lindblad(P))) < 1e-15


@given(fields_st)
def test_liouvillian_trace_and_hermiticity_preserving(f):
    art = _ART5
    lv = assemble_liouvillian(P, f, art)
    assert np.max(np.abs(TRACE_ROW @ lv)) < 1e-14
    rng = np.random.default_rng(0)
    a = _rand_c(rng, (4, 4))
    rho = a @ a.conj().T
    out = unvec(lv @ vec(rho))
    assert np.max(np.abs(out - out.conj().T)) < 1e-14


def test_tcl_vanishes_without_drive(art5):
    z = np.zeros((4, 4), dtype=complex)
    assert not np.any(build_phonon_tcl(z, z, z, art5.table))


def test_bath_off_is_exactly_coherent_plus_lindblad():
    f = FieldPoint(0.004, 0.001j, 0.02, 0.03)
    lv = assemble_liouvillian(P, f, _ART_OFF)
    h = build_hamiltonian(P, f, 1.0)
    np.testing.assert_array_equal(lv, coherent_part(h) + build_lindblad(P))


def test_bare_and_full_tcl_differ(art5):
    f = FieldPoint(0.005, 0, 0.01, 0.05)
    full = assemble_liouvillian(P, f, art5)
    bare = assemble_liouvillian(P, f, art5, tcl_bare_hs=True)
    assert np.max(np.abs(full - bare)) > 0


def test_weak_probe_two_level_coherence():
    omega = 1e-4
    rho = steady_state(assemble_liouvillian(P, FieldPoint(omega, 0, 0, 0), _ART_OFF))
    r_xg, r_yg = coherences(rho)
    assert r_xg == pytest.approx(-1j * omega / GAMMA2, rel=0.01)
    assert r_yg == 0


@pytest.mark.parametrize("omega", [0.005, 0.01])
def test_saturated_two_level_coherence(omega):
    s = 2 * omega**2 / (P.gamma1 * GAMMA2)
    rho = steady_state(assemble_liouvillian(P, FieldPoint(omega, 0, 0, 0), _ART_OFF))
    assert rho[1, 0] == pytest.approx(-1j * omega / GAMMA2 / (1 + 2 * s), rel=1e-10)
    assert rho[1, 1].real == pytest.approx(s / (1 + 2 * s), rel=1e-10)


def test_weak_probe_scales_with_franck_condon(art5):
    omega = 1e-5
    f = FieldPoint(omega, 0, 0, 0)
    rho = steady_state(assemble_liouvillian(P, f, art5))
    # phonons add a small extra dephasing on top of B^2-renormalized coupling
    assert abs(rho[1, 0]) < art5.b_mean * omega / GAMMA2
    assert abs(rho[1, 0]) > 0.8 * art5.b_mean * omega / GAMMA2


@given(fields_st)
def test_steady_state_is_density_matrix(f):
    rho = steady_state(assemble_liouvillian(P, f, _ART5))
    tr, herm, mn = density_matrix_errors(rho)
    assert tr < 1e-12 and herm < 1e-12 and mn > -1e-12


@given(fields_st)
def test_steady_state_spans_null_space(f):
    lv = assemble_liouvillian(P, f, _ART5)
    rho = steady_state(lv)
    ns = null_space(lv, rcond=1e-12)
    assert ns.shape[1] == 1
    v = ns[:, 0] / (TRACE_ROW @ ns[:, 0])
    np.testing.assert_allclose(vec(rho), v, atol=1e-9)


@given(fields_st, phase, phase, phase)
def test_gauge_covariance(f, a, b, c):
    # phases on L, 1, 2 act as a diagonal unitary on (g, x, y, u)
    e = np.exp(1j * np.array([0.0, a, a + b - c, a + b]))
    u = np.diag(e)
    f2 = FieldPoint(f.omega_L * e[1], f.omega_R * e[2], f.omega_1 * e[3] / e[1], f.omega_2 * e[3] / e[2])
    r1 = steady_state(assemble_liouvillian(P, f, _ART5))
    r2 = steady_state(assemble_liouvillian(P, f2, _ART5))
    np.testing.assert_allclose(r2, u @ r1 @ u.conj().T, atol=1e-11)


def test_steady_state_rejects_degenerate_null_space():
    with pytest.raises(SteadyStateAmbiguityError):
        steady_state(np.zeros((16, 16), dtype=complex))
    # no decay at all: every diagonal state is stationary
    lv = assemble_liouvillian(QdParams(0, 0, 0), FieldPoint(0, 0, 0, 0), _ART_OFF)
    with pytest.raises(SteadyStateAmbiguityError):
        steady_state(lv)


def test_time_evolve_reaches_steady_state(art5):
    f = FieldPoint(0.005, 0.0, 0.01, 0.05)
    lv = assemble_liouvillian(P, f, art5)
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1
    rho = time_evolve(lv, rho0, 1e4, 1.0)
    assert np.linalg.norm(rho - steady_state(lv)) < 1e-6


def test_time_evolve_rejects_non_multiple():
    with pytest.raises(ValueError):
        time_evolve(np.zeros((16, 16)), np.eye(4) / 4, 1.0, 0.3)


def test_batch_matches_single(rng, art5):
    fields = 0.05 * _rand_c(rng, (7, 4))
    batch = liouvillian_batch(P, fields, art5)
    for n in range(7):
        single = assemble_liouvillian(P, FieldPoint(*fields[n]), art5)
        np.testing.assert_allclose(batch[n], single, atol=1e-15)


def test_liouvillian_json_roundtrip(art5):
    lv = assemble_liouvillian(P, FieldPoint(0.005, 0, 0.01, 0.05), art5)
    np.testing.assert_array_equal(liouvillian_from_json(liouvillian_to_json(lv)), lv)


def test_eta_sign_and_length():
    assert P.eta < 0
    assert P.length_from_ztilde(0.034) == pytest.approx(0.034 / abs(P.eta))
