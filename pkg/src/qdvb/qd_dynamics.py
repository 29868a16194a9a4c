"""Polaron-frame master equation for the g-x-y-u biexciton diamond.

Conventions
-----------
* basis order (g, x, y, u), indices 0..3
* hbar = 1, every rate and Rabi amplitude in units of gamma_n
* density matrices are vectorized column-major: ``vec(rho)[a + 4*b] = rho[a, b]``,
  so ``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)``

Scalar entry points mirror the operations one field point at a time; the
``*_batch`` functions evaluate stacks of field points and carry the
propagation inner loop.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import PhysicsError, SteadyStateAmbiguityError
from .phonon_bath import BathArtifacts, HalfFourierTable

G, X, Y, U = 0, 1, 2, 3
BASIS = ("g", "x", "y", "u")
DIM = 4
SUPER = DIM * DIM

# (row, column) of each drive term, in FieldPoint order (L, R, 1, 2).
_DRIVE_SLOTS = ((X, G), (Y, G), (U, X), (U, Y))

TRACE_ROW = np.eye(DIM).reshape(-1, order="F")


@dataclass(frozen=True)
class QdParams:
    gamma1: float = 0.01
    gamma2: float = 0.01
    gamma_d: float = 0.01
    delta_p: float = 0.0
    delta_c: float = 0.0
    density: float = 1.5e19
    wavelength: float = 9.2e-7

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "gamma_d"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def eta(self) -> float:
        """Propagation coupling in gamma_n per metre (negative: absorbing)."""
        return -3.0 * self.density * self.wavelength**2 * self.gamma1 / (4.0 * np.pi)

    @property
    def eta_mag(self) -> float:
        return abs(self.eta)

    def length_from_ztilde(self, z_tilde: float) -> float:
        """Physical medium length in metres for the reduced coordinate z|eta|/gamma_n."""
        return z_tilde / self.eta_mag if self.eta_mag else float("inf")


@dataclass(frozen=True)
class FieldPoint:
    omega_L: complex = 0j
    omega_R: complex = 0j
    omega_1: complex = 0j
    omega_2: complex = 0j

    def as_array(self) -> np.ndarray:
        return np.array([self.omega_L, self.omega_R, self.omega_1, self.omega_2], dtype=complex)


def _op(i: int, j: int) -> np.ndarray:
    m = np.zeros((DIM, DIM), dtype=complex)
    m[i, j] = 1.0
    return m


def _dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _kron(a, b):
    """Batched Kronecker product over the leading axis (or plain for 2-D)."""
    lead = a.shape[:-2]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(lead + (SUPER, SUPER))


_EYE = np.eye(DIM, dtype=complex)


def spre(a):
    return _kron(np.broadcast_to(_EYE, a.shape), a)


def spost(b):
    return _kron(np.swapaxes(b, -1, -2), np.broadcast_to(_EYE, b.shape))


def sandwich(a, b):
    """Superoperator of rho -> a @ rho @ b."""
    return _kron(np.swapaxes(b, -1, -2), a)


def vec(rho):
    rho = np.asarray(rho)
    return np.swapaxes(rho, -1, -2).reshape(rho.shape[:-2] + (SUPER,))


def unvec(v):
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (DIM, DIM)), -1, -2)


def _drive_batch(fields):
    """D = W_L s_xg + W_1 s_ux + W_2 s_uy + W_R s_yg for fields of shape (..., 4)."""
    fields = np.asarray(fields, dtype=complex)
    d = np.zeros(fields.shape[:-1] + (DIM, DIM), dtype=complex)
    for k, (i, j) in enumerate(_DRIVE_SLOTS):
        d[..., i, j] = fields[..., k]
    return d


def _detuning_diag(params: QdParams) -> np.ndarray:
    return np.array([0.0, -params.delta_p, -params.delta_p, -(params.delta_p + params.delta_c)])


def build_drive_operators(fields: FieldPoint):
    """Polaron-frame system operators (X_g, X_u); both Hermitian."""
    d = _drive_batch(fields.as_array())
    return d + _dagger(d), 1j * d - 1j * _dagger(d)


def build_hamiltonian(params: QdParams, fields: FieldPoint, b_mean: float) -> np.ndarray:
    x_g, _ = build_drive_operators(fields)
    return np.diag(_detuning_diag(params)).astype(complex) + b_mean * x_g


def _lindblad_channels(params: QdParams):
    for i in (X, Y):
        yield params.gamma1, _op(G, i)
        yield params.gamma2, _op(i, U)
    for i in (X, Y, U):
        yield params.gamma_d, _op(i, i)


def build_lindblad(params: QdParams) -> np.ndarray:
    """-(gamma/2) L[O] summed over decay and dephasing channels.

    L[O] rho = O^dag O rho - 2 O rho O^dag + rho O^dag O.
    """
    out = np.zeros((SUPER, SUPER), dtype=complex)
    for rate, o in _lindblad_channels(params):
        if rate == 0:
            continue
        odo = o.conj().T @ o
        out -= 0.5 * rate * (spre(odo) + spost(odo) - 2.0 * sandwich(o, o.conj().T))
    return out


def coherent_part(h):
    """Superoperator of rho -> -i [H, rho]; works on stacks."""
    return -1j * (spre(h) - spost(h))


def filtered_operators(h_s, ops, table: HalfFourierTable):
    """Return X~_j = int_0^inf G_j(tau) e^{-iH tau} X_j e^{iH tau} dtau for each X_j.

    Uses the eigendecomposition H = V diag(d) V^dag, so the time integral
    reduces to K_j(-(d_a - d_b)) multiplying (V^dag X_j V)_{ab}.
    """
    d, v = np.linalg.eigh(h_s)
    bohr = d[..., :, None] - d[..., None, :]
    k_g, k_u = table.evaluate(-bohr)
    vh = _dagger(v)
    return [v @ ((vh @ x @ v) * k) @ vh for x, k in zip(ops, (k_g, k_u))]


def _tcl_from_filtered(ops, filtered):
    out = 0
    for x, xt in zip(ops, filtered):
        out = out - (
            spre(x @ xt)
            - sandwich(xt, x)
            + spost(_dagger(xt) @ x)
            - sandwich(x, _dagger(xt))
        )
    return out


def build_phonon_tcl(h_s, x_g, x_u, table: HalfFourierTable) -> np.ndarray:
    """Phonon TCL superoperator -sum_j ([X_j, X~_j rho] + H.c.)."""
    h_s = np.asarray(h_s, dtype=complex)
    if table.is_zero or not (np.any(x_g) or np.any(x_u)):
        return np.zeros(h_s.shape[:-2] + (SUPER, SUPER), dtype=complex)
    ops = (np.asarray(x_g), np.asarray(x_u))
    return _tcl_from_filtered(ops, filtered_operators(h_s, ops, table))


def liouvillian_batch(
    params: QdParams,
    fields,
    artifacts: BathArtifacts,
    *,
    tcl_bare_hs: bool = False,
    lindblad: np.ndarray | None = None,
) -> np.ndarray:
    """Full generator for a stack of field points, ``fields`` shaped (..., 4)."""
    fields = np.asarray(fields, dtype=complex)
    if lindblad is None:
        lindblad = build_lindblad(params)
    d = _drive_batch(fields)
    x_g = d + _dagger(d)
    diag = np.diag(_detuning_diag(params)).astype(complex)
    h_s = diag + artifacts.b_mean * x_g
    total = coherent_part(h_s) + lindblad
    if artifacts.tcl_active:
        x_u = 1j * d - 1j * _dagger(d)
        h_prop = np.broadcast_to(diag, h_s.shape) if tcl_bare_hs else h_s
        ops = (x_g, x_u)
        total = total + _tcl_from_filtered(ops, filtered_operators(h_prop, ops, artifacts.table))
    return total


def assemble_liouvillian(
    params: QdParams, fields: FieldPoint, artifacts: BathArtifacts, *, tcl_bare_hs: bool = False
) -> np.ndarray:
    return liouvillian_batch(params, fields.as_array(), artifacts, tcl_bare_hs=tcl_bare_hs)


def density_matrix_errors(rho):
    """(trace error, Hermiticity error, minimum eigenvalue) maxima over a stack."""
    rho = np.asarray(rho)
    tr = np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0)
    herm = np.abs(rho - _dagger(rho)).max(axis=(-2, -1))
    eig = np.linalg.eigvalsh(0.5 * (rho + _dagger(rho)))
    return float(np.max(tr)), float(np.max(herm)), float(np.min(eig))


def _closure(lv):
    a = np.array(lv, dtype=complex, copy=True)
    a[..., 0, :] = TRACE_ROW
    b = np.zeros(a.shape[:-1], dtype=complex)
    b[..., 0] = 1.0
    return a, b


def steady_state(lv, *, tol_null: float = 1e-10, tol_neg: float = 1e-6) -> np.ndarray:
    """Unique trace-one null vector of a single 16x16 generator."""
    lv = np.asarray(lv, dtype=complex)
    sv = np.linalg.svd(lv, compute_uv=False)
    if sv[-2] <= tol_null:
        raise SteadyStateAmbiguityError(
            f"second-smallest singular value {sv[-2]:.3e} <= {tol_null:g}: null space not unique"
        )
    a, b = _closure(lv)
    rho = unvec(np.linalg.solve(a, b))
    _, _, min_eig = density_matrix_errors(rho)
    if min_eig < -tol_neg:
        raise PhysicsError(f"steady state has eigenvalue {min_eig:.3e}")
    return rho


def steady_state_batch(lv, *, tol_neg: float = 1e-6) -> np.ndarray:
    """Steady states for a stack of generators of shape (N, 16, 16)."""
    a, b = _closure(lv)
    try:
        x = np.linalg.solve(a, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        for n in range(a.shape[0]):
            try:
                np.linalg.solve(a[n], b[n])
            except np.linalg.LinAlgError as exc:
                raise SteadyStateAmbiguityError(f"singular generator at batch index {n}") from exc
        raise
    if not np.all(np.isfinite(x)):
        bad = int(np.nonzero(~np.isfinite(x).all(axis=-1))[0][0])
        raise SteadyStateAmbiguityError(f"non-finite steady state at batch index {bad}")
    return unvec(x)


def time_evolve(lv, rho0, t_final: float, dt: float, *, check_every: int = 1000, tol: float = 1e-8):
    """Classical RK4 integration of vec(rho)' = L vec(rho) with fixed step ``dt``.

    For a constant generator one RK4 step is the matrix polynomial
    1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24, applied repeatedly.
    """
    lv = np.asarray(lv, dtype=complex)
    n_steps = int(round(t_final / dt))
    if n_steps < 0 or not np.isclose(n_steps * dt, t_final, rtol=1e-12, atol=1e-12):
        raise ValueError("t_final must be a non-negative multiple of dt")
    hl = dt * lv
    step = np.eye(SUPER, dtype=complex)
    term = np.eye(SUPER, dtype=complex)
    for k in range(1, 5):
        term = term @ hl / k
        step = step + term
    v = vec(np.asarray(rho0, dtype=complex))
    for n in range(1, n_steps + 1):
        v = step @ v
        if n % check_every == 0 or n == n_steps:
            tr, herm, mn = density_matrix_errors(unvec(v))
            if tr > tol or herm > tol or mn < -tol:
                raise PhysicsError(
                    f"time_evolve invariant violated at step {n}: trace {tr:.2e}, herm {herm:.2e}, eig {mn:.2e}"
                )
    return unvec(v)


def coherences(rho):
    """(rho_xg, rho_yg) = (<x|rho|g>, <y|rho|g>)."""
    rho = np.asarray(rho)
    return rho[..., X, G], rho[..., Y, G]


def liouvillian_to_json(lv) -> str:
    lv = np.asarray(lv, dtype=complex)
    payload = {
        "basis": list(BASIS),
        "vectorization": "column-major vec(rho)[a + 4*b] = rho[a, b]",
        "layout": "row-major",
        "shape": list(lv.shape),
        "data": [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in lv],
    }
    return json.dumps(payload, indent=1)


def liouvillian_from_json(text: str) -> np.ndarray:
    payload = json.loads(text)
    return np.array([[c["re"] + 1j * c["im"] for c in row] for row in payload["data"]], dtype=complex)
