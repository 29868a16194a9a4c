"""Laguerre-Gauss profiles, Stokes analysis and vector-beam labelling.

Transverse lengths are in units of the common waist ``w``; Rabi amplitudes
in gamma_n.  The left/right circular components follow the field labels
(L: probe, R: generated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import EmptyMaskError, WindingUndefinedError

DARK_FLOOR = 1e-12


@dataclass(frozen=True)
class LgInputSpec:
    amplitude: float
    oam: int = 0
    waist: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.waist > 0:
            raise ValueError(f"waist must be > 0, got {self.waist}")
        if int(self.oam) != self.oam:
            raise ValueError(f"oam must be an integer, got {self.oam}")


@dataclass(frozen=True)
class TransverseGrid:
    nx: int = 201
    ny: int = 201
    extent: float = 3.0

    def __post_init__(self):
        if self.nx % 2 == 0 or self.ny % 2 == 0 or self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be odd so the origin is a grid point")
        if not self.extent > 0:
            raise ValueError("extent must be > 0")

    @property
    def spacing(self) -> float:
        return 2 * self.extent / (self.nx - 1) if self.nx > 1 else 2 * self.extent

    @property
    def x(self) -> np.ndarray:
        # integer offsets keep the grid exactly mirror-symmetric about 0
        return (np.arange(self.nx) - self.nx // 2) * self.spacing

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.spacing

    def mesh(self):
        """(X, Y) arrays shaped (ny, nx); rows run along y."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def polar(self):
        xx, yy = self.mesh()
        return np.sqrt(xx**2 + yy**2), np.arctan2(yy, xx)

    def center_index(self):
        return self.ny // 2, self.nx // 2


def lg_radial(spec: LgInputSpec, r):
    """Real radial envelope A(r) = amp (r sqrt2 / w)^|l| exp(-r^2/w^2)."""
    r = np.asarray(r, dtype=float)
    return spec.amplitude * (r * math.sqrt(2) / spec.waist) ** abs(spec.oam) * np.exp(-(r**2) / spec.waist**2)


def lg_input_profile(spec: LgInputSpec, grid: TransverseGrid) -> np.ndarray:
    r, phi = grid.polar()
    return lg_radial(spec, r) * np.exp(1j * (spec.oam * phi + spec.phase))


def lg_full_mode(amplitude, l, waist, wavenumber, refractive_index, r, phi, z):
    """Free-space LG_0^l mode including curvature, Gouy phase and carrier phase."""
    r = np.asarray(r, dtype=float)
    al = abs(int(l))
    n = refractive_index
    z_r = wavenumber * waist**2 / 2.0
    w_z = waist * np.sqrt(1.0 + z**2 / (n**2 * z_r**2))
    gouy = (al + 1) * np.arctan(z / (n * z_r))
    curvature = wavenumber * n * r**2 * z / (2.0 * (z**2 + n**2 * z_r**2))
    norm = math.sqrt(2.0 / (math.pi * math.factorial(al)))
    envelope = amplitude * norm * (r * math.sqrt(2) / w_z) ** al * np.exp(-(r**2) / w_z**2)
    return envelope * np.exp(1j * (curvature + l * np.asarray(phi) - gouy + wavenumber * n * z))


@dataclass(frozen=True, eq=False)
class StokesField:
    S0: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray

    def closure_error(self, floor: float = DARK_FLOOR) -> float:
        """max over unmasked pixels of (S0^2 - S1^2 - S2^2 - S3^2) / S0^2."""
        mask = self.S0 > floor * self.S0.max(initial=0.0)
        if not mask.any():
            return 0.0
        s0 = self.S0[mask]
        resid = s0**2 - (self.S1[mask] ** 2 + self.S2[mask] ** 2 + self.S3[mask] ** 2)
        return float(np.max(np.abs(resid) / s0**2))


@dataclass(frozen=True, eq=False)
class EllipseField:
    chi: np.ndarray
    psi: np.ndarray
    mask: np.ndarray


def stokes(e_l, e_r) -> StokesField:
    e_l = np.asarray(e_l, dtype=complex)
    e_r = np.asarray(e_r, dtype=complex)
    if e_l.shape != e_r.shape:
        raise ValueError(f"field grids differ in shape: {e_l.shape} vs {e_r.shape}")
    il, ir = np.abs(e_l) ** 2, np.abs(e_r) ** 2
    cross = np.conj(e_l) * e_r
    return StokesField(il + ir, 2 * cross.real, 2 * cross.imag, il - ir)


def ellipse_field(s: StokesField, floor: float = DARK_FLOOR) -> EllipseField:
    """Ellipticity chi in [-pi/4, pi/4] and orientation psi in (-pi/2, pi/2].

    Pixels with S0 below ``floor`` times the frame maximum are masked (NaN).
    """
    peak = s.S0.max(initial=0.0)
    mask = s.S0 > floor * peak
    if not mask.any():
        raise EmptyMaskError("all pixels are below the dark floor")
    chi = np.full(s.S0.shape, np.nan)
    psi = np.full(s.S0.shape, np.nan)
    chi[mask] = 0.5 * np.arcsin(np.clip(s.S3[mask] / s.S0[mask], -1.0, 1.0))
    psi[mask] = 0.5 * np.arctan2(s.S2[mask], s.S1[mask])
    return EllipseField(chi, psi, mask)


def peak_ratio(e_l, e_r) -> float:
    """max |E_L|^2 / max |E_R|^2 on the given samples."""
    il = float(np.max(np.abs(e_l) ** 2))
    ir = float(np.max(np.abs(e_r) ** 2))
    return il / ir if ir > 0 else math.inf


def relative_amplitude(e_l, e_r) -> float:
    """Measured relative-amplitude angle alpha = arctan(|E_R|peak / |E_L|peak)."""
    return math.atan2(float(np.max(np.abs(e_r))), float(np.max(np.abs(e_l))))


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def vb_classify(e_l, e_r, l_L: int, l_R: int, theta_rel: float, *, tol: float = 1e-6) -> str:
    """Rule-based vector-beam label from the synthesis inputs.

    The field grids only gate the decision: with either component dark the
    beam is scalar and the label is ``"other"``.
    """
    if np.max(np.abs(e_l), initial=0.0) == 0 or np.max(np.abs(e_r), initial=0.0) == 0:
        return "other"
    fp = {(0, 1): "lemon", (0, -1): "star", (0, -3): "web"}
    if (l_L, l_R) in fp:
        return fp[(l_L, l_R)]
    if l_L != 0 and l_R == -l_L:
        t = _wrap(theta_rel)
        for label, ref in (("radial", 0.0), ("azimuthal", np.pi), ("spiral", np.pi / 2)):
            if abs(_wrap(t - ref)) < tol:
                return label
    return "other"


def sample_ring(field, grid: TransverseGrid, radius: float, n_samples: int = 720):
    """Bilinear samples of a complex grid on a circle; returns (angles, values)."""
    ang = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    xs = radius * np.cos(ang)
    ys = radius * np.sin(ang)
    col = (xs - grid.x[0]) / (grid.x[1] - grid.x[0])
    row = (ys - grid.y[0]) / (grid.y[1] - grid.y[0])
    coords = np.vstack([row, col])
    field = np.asarray(field, dtype=complex)
    re = map_coordinates(field.real, coords, order=1, mode="nearest")
    im = map_coordinates(field.imag, coords, order=1, mode="nearest")
    return ang, re + 1j * im


def peak_radius(field, grid: TransverseGrid) -> float:
    """Radius of maximum |field| along the +x half-axis."""
    cy, cx = grid.center_index()
    cut = np.abs(np.asarray(field)[cy, cx:])
    return float(grid.x[cx + int(np.argmax(cut))])


def phase_winding(field, grid: TransverseGrid, radius: float, *, n_samples: int = 720,
                  noise_floor: float = 1e-6) -> int:
    """Topological charge: total phase advance around a ring divided by 2 pi."""
    _, vals = sample_ring(field, grid, radius, n_samples)
    mags = np.abs(vals)
    ref = float(np.max(np.abs(field)))
    bright = mags > noise_floor * ref if ref > 0 else np.zeros_like(mags, dtype=bool)
    if bright.mean() < 0.95:
        raise WindingUndefinedError(f"only {bright.mean():.1%} of the ring at r={radius:g} is above the floor")
    steps = np.angle(np.roll(vals, -1) * np.conj(vals))
    return int(round(float(np.sum(steps)) / (2 * np.pi)))
