"""Propagation of the probe and generated fields through the quantum-dot disc.

Along the reduced coordinate z~ = z |eta| / gamma_n the weak fields obey

    dW_L/dz~ = -i rho_xg,    dW_R/dz~ = -i rho_yg

with coherences taken from the local steady state; the sign is the one that
absorbs a resonant probe.  Controls W_1, W_2 are undepleted and there is no
transverse coupling, so every pixel is an independent ODE.

Two execution modes share the same per-pixel solver:

``"none"``
    integrate every pixel of the grid.
``"vortex"``
    LG inputs make the local generator at (r, phi) a diagonal-unitary gauge
    transform of the one at (r, 0).  Each distinct radius is integrated
    once on the phi = 0 ray and mapped back with exp(i l phi) factors,
    l_R = l_L + l_1 - l_2 for the generated field.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel
from .errors import PhysicsError, PixelError, TableRangeError, SteadyStateAmbiguityError
from .phonon_bath import BathArtifacts, PhononBath
from .qd_dynamics import (
    FieldPoint,
    QdParams,
    assemble_liouvillian,
    build_lindblad,
    coherences,
    steady_state,
    _detuning_diag,
)
from .structured_light import LgInputSpec, TransverseGrid, lg_input_profile, lg_radial

log = logging.getLogger(__name__)

#: Orientation of the propagation coupling: dW/dz~ = i * ETA_SIGN * rho.
ETA_SIGN = -1.0
HALVING_RTOL = 1e-6


@dataclass(frozen=True)
class PropagationConfig:
    grid: TransverseGrid
    probe: LgInputSpec
    control1: LgInputSpec
    control2: LgInputSpec
    params: QdParams = field(default_factory=QdParams)
    bath: PhononBath = field(default_factory=PhononBath)
    z_final: float = 0.04
    n_steps: int = 400
    snapshots: tuple = ()
    medium_off: bool = False
    tcl_bare_hs: bool = False
    reduction: str = "vortex"
    table_delta_max: float = 20.0
    table_points: int = 4001

    def __post_init__(self):
        if not self.z_final >= 0:
            raise ValueError("z_final must be >= 0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.reduction not in ("vortex", "none"):
            raise ValueError(f"unknown reduction mode {self.reduction!r}")

    @property
    def step(self) -> float:
        return self.z_final / self.n_steps

    @property
    def l_generated(self) -> int:
        return self.probe.oam + self.control1.oam - self.control2.oam

    def snapshot_steps(self):
        """Map every requested z~ (plus 0 and z_final) to its step index."""
        out = {}
        for z in sorted({0.0, float(self.z_final), *map(float, self.snapshots)}):
            if z > self.z_final * (1 + 1e-12):
                raise ValueError(f"snapshot z~={z} beyond z_final={self.z_final}")
            k = round(z / self.step) if self.step > 0 else 0
            if abs(k * self.step - z) > 1e-9 * max(1.0, z):
                raise ValueError(f"snapshot z~={z} is not a multiple of the step {self.step:g}")
            out[k] = z
        return out


@dataclass(frozen=True, eq=False)
class FieldGrid:
    z: float
    omega_L: np.ndarray
    omega_R: np.ndarray
    omega_1: np.ndarray
    omega_2: np.ndarray


@dataclass
class InvariantLog:
    """Worst density-matrix invariant values seen across all steady-state solves."""

    max_trace_error: float = 0.0
    max_hermiticity_error: float = 0.0
    min_eigenvalue: float = math.inf
    n_solves: int = 0

    def update(self, rho: np.ndarray) -> None:
        if rho.size == 0:
            return
        tr = np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0).max()
        herm = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))).max()
        eig = np.linalg.eigvalsh(0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))).min()
        self.max_trace_error = max(self.max_trace_error, float(tr))
        self.max_hermiticity_error = max(self.max_hermiticity_error, float(herm))
        self.min_eigenvalue = min(self.min_eigenvalue, float(eig))
        self.n_solves += rho.shape[0]
        if eig < -1e-6:
            raise PhysicsError(f"steady state with eigenvalue {eig:.3e}")

    def as_dict(self) -> dict:
        return {
            "max_trace_error": self.max_trace_error,
            "max_hermiticity_error": self.max_hermiticity_error,
            "min_eigenvalue": self.min_eigenvalue if self.n_solves else None,
            "n_solves": self.n_solves,
        }


@dataclass(eq=False)
class PropagationResult:
    config: PropagationConfig
    snapshots: list
    invariants: InvariantLog
    n_trajectories: int
    identity: bool = False

    def at(self, z: float) -> FieldGrid:
        for snap in self.snapshots:
            if abs(snap.z - z) <= 1e-9 * max(1.0, z):
                return snap
        raise KeyError(f"no snapshot at z~={z}")

    @property
    def final(self) -> FieldGrid:
        return self.snapshots[-1]


class PixelSolver:
    """Steady-state coherences for stacks of field points via the compiled kernel."""

    def __init__(self, params: QdParams, artifacts: BathArtifacts, tcl_bare_hs: bool = False):
        self.params = params
        self.artifacts = artifacts
        self.tcl_bare_hs = tcl_bare_hs
        self._lind = build_lindblad(params)
        self._diag = _detuning_diag(params).astype(float)
        spline = artifacts.table._spline
        self._knots = np.ascontiguousarray(spline.x)
        self._coeffs = np.ascontiguousarray(spline.c)

    def steady_states(self, fields: np.ndarray) -> np.ndarray:
        fields = np.ascontiguousarray(fields, dtype=complex)
        n = fields.shape[0]
        rho = np.empty((n, 4, 4), dtype=complex)
        status = np.empty(n, dtype=np.int64)
        _kernel.steady_states(
            fields, self._diag, float(self.artifacts.b_mean), self._lind,
            bool(self.artifacts.tcl_active), bool(self.tcl_bare_hs),
            self._knots, self._coeffs, float(self.artifacts.table.delta_max), rho, status,
        )
        bad = np.nonzero(status)[0]
        if bad.size:
            code = status[bad[0]]
            exc = (TableRangeError("Bohr difference outside table") if code == _kernel.OUT_OF_RANGE
                   else SteadyStateAmbiguityError("singular trace-closed generator"))
            raise PixelError(int(bad[0]), exc)
        return rho


def rhs(point: FieldPoint, params: QdParams, artifacts: BathArtifacts, *, tcl_bare_hs=False):
    """(dW_L/dz~, dW_R/dz~) at one field point from the reference dense solver."""
    rho = steady_state(assemble_liouvillian(params, point, artifacts, tcl_bare_hs=tcl_bare_hs))
    r_xg, r_yg = coherences(rho)
    return 1j * ETA_SIGN * r_xg, 1j * ETA_SIGN * r_yg


def integrate_fields(
    fields0: np.ndarray,
    solver: PixelSolver | None,
    z_final: float,
    n_steps: int,
    save_steps=(),
    invariants: InvariantLog | None = None,
):
    """RK4 in z~ for a stack of independent pixels.

    ``fields0`` has shape (M, 4) in (L, R, 1, 2) order; returns a dict
    step index -> (M, 4) array for every index in ``save_steps``.  A
    ``solver`` of None switches the medium off (zero source).
    """
    fields0 = np.asarray(fields0, dtype=complex)
    save = set(save_steps)
    out = {}
    y = fields0[:, :2].copy()
    ctrl = fields0[:, 2:]
    if 0 in save:
        out[0] = fields0.copy()
    if solver is None or z_final == 0:
        for k in save:
            out[k] = fields0.copy()
        return out
    h = z_final / n_steps
    buf = np.empty_like(fields0)
    buf[:, 2:] = ctrl

    def f(state):
        buf[:, :2] = state
        rho = solver.steady_states(buf)
        if invariants is not None:
            invariants.update(rho)
        r_xg, r_yg = coherences(rho)
        return 1j * ETA_SIGN * np.stack([r_xg, r_yg], axis=1)

    for n in range(1, n_steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if n in save:
            full = np.empty_like(fields0)
            full[:, :2] = y
            full[:, 2:] = ctrl
            out[n] = full
    return out


def input_fields(config: PropagationConfig) -> FieldGrid:
    g = config.grid
    zero = np.zeros((g.ny, g.nx), dtype=complex)
    return FieldGrid(
        0.0,
        lg_input_profile(config.probe, g),
        zero,
        lg_input_profile(config.control1, g),
        lg_input_profile(config.control2, g),
    )


def _artifacts_for(config: PropagationConfig, artifacts: BathArtifacts | None) -> BathArtifacts:
    if artifacts is not None:
        return artifacts
    return BathArtifacts.build(config.bath, config.table_delta_max, config.table_points)


def propagate(
    config: PropagationConfig,
    artifacts: BathArtifacts | None = None,
    *,
    threads: int | None = None,
    check_invariants: bool = True,
) -> PropagationResult:
    """Integrate the configured scenario and return the requested snapshots."""
    _kernel.set_threads(threads)
    inputs = input_fields(config)
    steps = config.snapshot_steps()
    log_inv = InvariantLog()
    if config.medium_off or config.z_final == 0:
        snaps = [replace(inputs, z=z) for _, z in sorted(steps.items())]
        return PropagationResult(config, snaps, log_inv, 0, identity=True)

    art = _artifacts_for(config, artifacts)
    solver = PixelSolver(config.params, art, config.tcl_bare_hs)
    g = config.grid
    inv = log_inv if check_invariants else None

    if config.reduction == "vortex":
        r, phi = g.polar()
        r2 = (g.mesh()[0] ** 2 + g.mesh()[1] ** 2).ravel()
        uniq, index = np.unique(r2, return_inverse=True)
        r_ref = np.sqrt(uniq)
        ref = np.zeros((uniq.size, 4), dtype=complex)
        ref[:, 0] = lg_radial(config.probe, r_ref) * np.exp(1j * config.probe.phase)
        ref[:, 2] = lg_radial(config.control1, r_ref) * np.exp(1j * config.control1.phase)
        ref[:, 3] = lg_radial(config.control2, r_ref) * np.exp(1j * config.control2.phase)
        try:
            traj = integrate_fields(ref, solver, config.z_final, config.n_steps, steps, inv)
        except PixelError as exc:
            flat = int(np.nonzero(index == exc.index)[0][0])
            raise PixelError(tuple(int(i) for i in np.unravel_index(flat, (g.ny, g.nx))), exc.cause) from exc
        wind_l = np.exp(1j * config.probe.oam * phi)
        wind_r = np.exp(1j * config.l_generated * phi)
        snaps = []
        for k, z in sorted(steps.items()):
            if k == 0:
                snaps.append(inputs)
                continue
            a = traj[k]
            snaps.append(FieldGrid(
                z,
                a[index, 0].reshape(g.ny, g.nx) * wind_l,
                a[index, 1].reshape(g.ny, g.nx) * wind_r,
                inputs.omega_1,
                inputs.omega_2,
            ))
        n_traj = uniq.size
    else:
        stack = np.stack(
            [inputs.omega_L.ravel(), inputs.omega_R.ravel(), inputs.omega_1.ravel(), inputs.omega_2.ravel()],
            axis=1,
        )
        try:
            traj = integrate_fields(stack, solver, config.z_final, config.n_steps, steps, inv)
        except PixelError as exc:
            raise PixelError(tuple(int(i) for i in np.unravel_index(exc.index, (g.ny, g.nx))), exc.cause) from exc
        snaps = [inputs] if 0 in steps else []
        for k, z in sorted(steps.items()):
            if k == 0:
                continue
            a = traj[k]
            snaps.append(FieldGrid(z, *(a[:, c].reshape(g.ny, g.nx) for c in range(4))))
        n_traj = stack.shape[0]
    return PropagationResult(config, snaps, log_inv, n_traj)


def final_field_change(a: FieldGrid, b: FieldGrid) -> float:
    """Largest change of W_L or W_R relative to that field's peak magnitude."""
    worst = 0.0
    for name in ("omega_L", "omega_R"):
        x, y = getattr(a, name), getattr(b, name)
        scale = max(np.abs(y).max(), 1e-300)
        worst = max(worst, float(np.abs(x - y).max() / scale))
    return worst


def step_halving_check(config: PropagationConfig, artifacts: BathArtifacts | None = None, **kw) -> float:
    """Re-run with twice the steps; warn when final fields move by more than 1e-6."""
    art = _artifacts_for(config, artifacts)
    coarse = propagate(replace(config, snapshots=()), art, **kw).final
    fine = propagate(replace(config, n_steps=2 * config.n_steps, snapshots=()), art, **kw).final
    change = final_field_change(coarse, fine)
    if change > HALVING_RTOL:
        warnings.warn(f"step halving changed final fields by {change:.2e}", RuntimeWarning, stacklevel=2)
    return change


@dataclass(frozen=True, eq=False)
class LineCut:
    x: np.ndarray
    intensity_L: np.ndarray
    intensity_R: np.ndarray
    z: float

    def peak_ratio(self) -> float:
        """Refined peak(|W_L|^2) / peak(|W_R|^2) along the cut."""
        pr = refined_peak(self.x, self.intensity_R)
        return refined_peak(self.x, self.intensity_L) / pr if pr > 0 else math.inf


def refined_peak(x, values) -> float:
    """Maximum of a sampled curve, refined by a parabola through the top three samples."""
    values = np.asarray(values, dtype=float)
    k = int(np.argmax(values))
    if k == 0 or k == values.size - 1:
        return float(values[k])
    y0, y1, y2 = values[k - 1 : k + 2]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return float(y1)
    return float(y1 - 0.125 * (y2 - y0) ** 2 / denom)


def line_cut(snapshot: FieldGrid, grid: TransverseGrid, i0: float, axis: str = "x") -> LineCut:
    """Intensities through the origin, normalized to the applied-field peak ``i0``."""
    cy, cx = grid.center_index()
    if axis == "x":
        coord, sl = grid.x, (cy, slice(None))
    elif axis == "y":
        coord, sl = grid.y, (slice(None), cx)
    else:
        raise ValueError("axis must be 'x' or 'y'")
    il = np.abs(snapshot.omega_L[sl]) ** 2 / i0
    ir = np.abs(snapshot.omega_R[sl]) ** 2 / i0
    return LineCut(coord.copy(), il, ir, snapshot.z)


def write_line_cut_csv(path, cut: LineCut) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_over_w", "IL_over_I0", "IR_over_I0"])
        for row in zip(cut.x, cut.intensity_L, cut.intensity_R):
            w.writerow([repr(float(v)) for v in row])
