"""Acoustic-phonon bath: spectral density, Franck-Condon factor, correlation
and polaron Green functions, plus tabulated half-Fourier transforms.

All frequencies are in units of gamma_n (100 ueV); times in 1/gamma_n.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import DomainError, QuadratureError, TableRangeError

#: Boltzmann constant in gamma_n per kelvin for gamma_n = 100 ueV.
KB_GN_PER_K = 0.8617

OMEGA_MAX_FACTOR = 8.0
QUAD_RTOL = 1e-9
G_TAIL_THRESHOLD = 1e-10
TAU_CAP = 32.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class PhononBath:
    """Super-Ohmic bath with J(w) = alpha_p w^3 exp(-w^2 / 2 omega_b^2)."""

    alpha_p: float = 1.42e-3
    omega_b: float = 10.0
    temperature: float = 5.0
    enabled: bool = True

    def __post_init__(self):
        if not self.alpha_p >= 0:
            raise DomainError(f"alpha_p must be >= 0, got {self.alpha_p}")
        if not self.omega_b > 0:
            raise DomainError(f"omega_b must be > 0, got {self.omega_b}")
        if not self.temperature >= 0:
            raise DomainError(f"temperature must be >= 0, got {self.temperature}")

    @property
    def kT(self) -> float:
        return KB_GN_PER_K * self.temperature

    @property
    def omega_max(self) -> float:
        return OMEGA_MAX_FACTOR * self.omega_b

    @property
    def active(self) -> bool:
        return self.enabled and self.alpha_p > 0


def spectral_density(bath: PhononBath, omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise DomainError("spectral density is defined for omega >= 0")
    if not bath.enabled:
        return np.zeros_like(omega)[()]
    return (bath.alpha_p * omega**3 * np.exp(-(omega**2) / (2 * bath.omega_b**2)))[()]


def _omega_coth(bath: PhononBath, omega):
    """omega * coth(omega / 2kT), with the T = 0 and omega -> 0 limits."""
    omega = np.asarray(omega, dtype=float)
    if bath.kT == 0:
        return omega
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = omega / (2 * bath.kT)
        out = omega / np.tanh(x)
    return np.where(x < 1e-8, 2 * bath.kT, out)


def _thermal_weight(bath: PhononBath, omega):
    """J(w)/w^2 * coth(w / 2kT)."""
    omega = np.asarray(omega, dtype=float)
    return bath.alpha_p * np.exp(-(omega**2) / (2 * bath.omega_b**2)) * _omega_coth(bath, omega)


def _plain_weight(bath: PhononBath, omega):
    """J(w)/w^2."""
    omega = np.asarray(omega, dtype=float)
    return bath.alpha_p * omega * np.exp(-(omega**2) / (2 * bath.omega_b**2))


def franck_condon(bath: PhononBath) -> float:
    """Thermal expectation <B> of the phonon displacement operator."""
    if not bath.active:
        return 1.0
    value, err = quad(
        lambda w: float(_thermal_weight(bath, w)),
        0.0,
        bath.omega_max,
        epsabs=0.0,
        epsrel=1e-12,
        limit=200,
    )
    if err > QUAD_RTOL * abs(value):
        raise QuadratureError(f"<B> integral not converged: {value} +- {err}")
    return float(np.exp(-0.5 * value))


def _gl_panels(a: float, b: float, n_panels: int):
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _phi_on_nodes(bath: PhononBath, tau, n_panels: int, chunk: int = 512):
    nodes, weights = _gl_panels(0.0, bath.omega_max, n_panels)
    wc = weights * _thermal_weight(bath, nodes)
    ws = weights * _plain_weight(bath, nodes)
    out = np.empty(tau.shape, dtype=complex)
    flat = tau.ravel()
    res = out.reshape(-1)
    for start in range(0, flat.size, chunk):
        t = flat[start : start + chunk, None] * nodes[None, :]
        res[start : start + chunk] = np.cos(t) @ wc - 1j * (np.sin(t) @ ws)
    return out


def correlation_phi(bath: PhononBath, tau):
    """Phonon correlation phi(tau) by composite Gauss-Legendre quadrature over omega.

    The panel count scales with the largest requested tau so that each panel
    spans at most two radians of the cos/sin oscillation; the result is
    accepted only if doubling the panel count changes it by less than
    ``QUAD_RTOL`` relative to phi(0).
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise DomainError("correlation_phi requires tau >= 0")
    if not bath.active:
        return np.zeros(tau.shape, dtype=complex)[()]
    tmax = float(tau.max()) if tau.size else 0.0
    n_panels = max(32, int(np.ceil(bath.omega_max * tmax / 2.0)))
    coarse = _phi_on_nodes(bath, tau, n_panels)
    fine = _phi_on_nodes(bath, tau, 2 * n_panels)
    scale = bath.alpha_p * bath.omega_b**2
    if np.max(np.abs(fine - coarse), initial=0.0) > QUAD_RTOL * scale:
        raise QuadratureError("phi(tau) quadrature did not converge on panel refinement")
    return fine[()]


def green_functions(bath: PhononBath, tau, *, b_mean: float | None = None):
    """Polaron Green functions (G_g, G_u) at delay(s) tau."""
    tau = np.asarray(tau, dtype=float)
    if not bath.active:
        z = np.zeros(tau.shape, dtype=complex)[()]
        return z, z
    b = franck_condon(bath) if b_mean is None else b_mean
    phi = correlation_phi(bath, tau)
    return b**2 * (np.cosh(phi) - 1.0), b**2 * np.sinh(phi)


def _find_tau_max(bath: PhononBath, b_mean: float):
    """Smallest tau beyond which both |G_j| stay below the tail threshold."""
    tau_cap = 2.0
    while True:
        grid = np.linspace(0.0, tau_cap, int(400 * tau_cap) + 1)
        g_g, g_u = green_functions(bath, grid, b_mean=b_mean)
        mag = np.maximum(np.abs(g_g), np.abs(g_u))
        above = np.nonzero(mag >= G_TAIL_THRESHOLD)[0]
        last = grid[above[-1]] if above.size else 0.0
        if last < 0.5 * tau_cap:
            return max(1.1 * last, 10.0 / bath.omega_b), float(mag[grid > 1.1 * last].max(initial=0.0))
        if tau_cap >= TAU_CAP:
            tail = float(mag[-1])
            warnings.warn(
                f"Green functions still {tail:.2e} at tau = {TAU_CAP}; table truncated there",
                RuntimeWarning,
                stacklevel=3,
            )
            return TAU_CAP, tail
        tau_cap *= 2.0


@dataclass(frozen=True, eq=False)
class HalfFourierTable:
    """Tabulated K_j(Delta) = int_0^inf G_j(tau) exp(i Delta tau) dtau, j in {g, u}."""

    bath: PhononBath
    b_mean: float
    delta_grid: np.ndarray
    K_g: np.ndarray
    K_u: np.ndarray
    tau_max: float
    tail_level: float

    def __post_init__(self):
        stacked = np.column_stack([self.K_g.real, self.K_g.imag, self.K_u.real, self.K_u.imag])
        object.__setattr__(self, "_spline", CubicSpline(self.delta_grid, stacked, axis=0))

    @property
    def delta_max(self) -> float:
        return float(self.delta_grid[-1])

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.K_g) or np.any(self.K_u))

    def evaluate(self, delta):
        """Cubic-interpolated (K_g, K_u) at arbitrary Delta within the table."""
        delta = np.asarray(delta, dtype=float)
        if delta.size and np.max(np.abs(delta)) > self.delta_max:
            raise TableRangeError(
                f"Bohr difference {np.max(np.abs(delta)):.4g} exceeds table range {self.delta_max:.4g}"
            )
        if self.is_zero:
            z = np.zeros(delta.shape, dtype=complex)
            return z, z.copy()
        v = self._spline(delta)
        return v[..., 0] + 1j * v[..., 1], v[..., 2] + 1j * v[..., 3]

    def save(self, path) -> None:
        """Write ``path`` (binary) and ``path.json`` (sidecar).

        Binary layout: little-endian float64 triplets (Delta, Re K, Im K),
        all K_g rows first, then all K_u rows.
        """
        path = Path(path)
        rows = [np.column_stack([self.delta_grid, k.real, k.imag]) for k in (self.K_g, self.K_u)]
        np.concatenate(rows).astype("<f8").tofile(path)
        meta = {
            "format": "half_fourier_table/v1",
            "layout": "float64 little-endian triplets (delta, re, im); K_g block then K_u block",
            "functions": ["K_g", "K_u"],
            "n_points": int(self.delta_grid.size),
            "delta_max_gn": self.delta_max,
            "bath": asdict(self.bath),
            "b_mean": self.b_mean,
            "tau_max": self.tau_max,
            "tail_level": self.tail_level,
            "tolerances": {"quad_rtol": QUAD_RTOL, "g_tail_threshold": G_TAIL_THRESHOLD},
        }
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "HalfFourierTable":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".json").read_text())
        n = meta["n_points"]
        data = np.fromfile(path, dtype="<f8").reshape(2, n, 3)
        return cls(
            bath=PhononBath(**meta["bath"]),
            b_mean=meta["b_mean"],
            delta_grid=data[0, :, 0].copy(),
            K_g=data[0, :, 1] + 1j * data[0, :, 2],
            K_u=data[1, :, 1] + 1j * data[1, :, 2],
            tau_max=meta["tau_max"],
            tail_level=meta["tail_level"],
        )


def build_half_fourier_table(
    bath: PhononBath, delta_max: float = 20.0, n_points: int = 4001
) -> HalfFourierTable:
    if n_points < 4 or n_points % 2 == 0:
        raise DomainError("n_points must be odd and >= 5 so the grid is symmetric about 0")
    half = n_points // 2
    delta = np.arange(-half, half + 1) * (delta_max / half)
    b_mean = franck_condon(bath)
    if not bath.active:
        zeros = np.zeros(n_points, dtype=complex)
        return HalfFourierTable(bath, b_mean, delta, zeros, zeros.copy(), 0.0, 0.0)
    tau_max, tail = _find_tau_max(bath, b_mean)
    # Panels resolve both the Green-function structure (~1/omega_b) and e^{i Delta tau}.
    width = min(2.0 / delta_max, 0.5 / bath.omega_b)
    tau, w = _gl_panels(0.0, tau_max, max(1, int(np.ceil(tau_max / width))))
    g_g, g_u = green_functions(bath, tau, b_mean=b_mean)
    K_g = np.empty(n_points, dtype=complex)
    K_u = np.empty(n_points, dtype=complex)
    for start in range(0, n_points, 256):
        ph = np.exp(1j * delta[start : start + 256, None] * tau[None, :]) * w[None, :]
        K_g[start : start + 256] = ph @ g_g
        K_u[start : start + 256] = ph @ g_u
    return HalfFourierTable(bath, b_mean, delta, K_g, K_u, float(tau_max), tail)


@dataclass(frozen=True)
class BathArtifacts:
    """Everything the dynamics needs from the bath, computed once per run."""

    bath: PhononBath
    b_mean: float
    table: HalfFourierTable

    @classmethod
    def build(cls, bath: PhononBath, delta_max: float = 20.0, n_points: int = 4001):
        table = build_half_fourier_table(bath, delta_max, n_points)
        return cls(bath, table.b_mean, table)

    @property
    def tcl_active(self) -> bool:
        return self.bath.active and not self.table.is_zero
