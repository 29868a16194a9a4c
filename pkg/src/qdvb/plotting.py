"""PNG heatmaps, line-cut plots and SVG polarization-ellipse overlays.

Images use math orientation: +x to the right, +y up, angles counter-
clockwise from +x.  The SVG writer flips y itself, so glyph rotations are
mirrored there; both conventions are written into the image metadata.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import quoteattr

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.patches import Ellipse

from .errors import EmptyMaskError
from .structured_light import DARK_FLOOR, TransverseGrid, ellipse_field

COLORMAP = "inferno"
HANDEDNESS = "x right, y up (origin lower-left); angles counter-clockwise from +x"
CHI_SPLIT = math.pi / 8
GLYPH_FLOOR = 1e-3
COLORS = {"left": "#2b5cff", "right": "#e8262b", "linear": "#ffffff"}


def glyph_color(chi: float) -> str:
    """Blue for left-circular-ish, red for right-circular-ish, white near linear."""
    if chi > CHI_SPLIT:
        return COLORS["left"]
    if chi < -CHI_SPLIT:
        return COLORS["right"]
    return COLORS["linear"]


def lattice_indices(n: int, step: int) -> np.ndarray:
    """Every ``step``-th index, anchored on the centre sample."""
    c = n // 2
    return np.concatenate([np.arange(c, -1, -step)[::-1], np.arange(c + step, n, step)])


def glyphs(stokes, grid: TransverseGrid, decimation: int = 12, floor: float = GLYPH_FLOOR):
    """(x, y, chi, psi) of every glyph on the decimated lattice."""
    try:
        ell = ellipse_field(stokes, DARK_FLOOR)
    except EmptyMaskError:
        return []
    peak = stokes.S0.max()
    out = []
    for i in lattice_indices(grid.ny, decimation):
        for j in lattice_indices(grid.nx, decimation):
            if ell.mask[i, j] and stokes.S0[i, j] > floor * peak:
                out.append((float(grid.x[j]), float(grid.y[i]), float(ell.chi[i, j]), float(ell.psi[i, j])))
    return out


def ellipse_svg(stokes, grid: TransverseGrid, decimation: int = 12, size: int = 600) -> str:
    scale = size / (2 * grid.extent)
    radius = 0.45 * decimation * grid.spacing * scale
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f"<desc>{_escape(HANDEDNESS + '; SVG y axis flipped; blue chi>pi/8, red chi<-pi/8, white otherwise')}</desc>",
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#202020"/>',
    ]
    for x, y, chi, psi in glyphs(stokes, grid, decimation):
        cx = (x + grid.extent) * scale
        cy = (grid.extent - y) * scale
        rx = radius * math.cos(chi)
        ry = max(radius * abs(math.sin(chi)), 0.04 * radius)
        lines.append(
            f'<ellipse cx="{cx:.3f}" cy="{cy:.3f}" rx="{rx:.3f}" ry="{ry:.3f}" '
            f'transform="rotate({-math.degrees(psi):.3f} {cx:.3f} {cy:.3f})" '
            f'fill="none" stroke="{glyph_color(chi)}" stroke-width="1.5"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return quoteattr(text)[1:-1]


def _save(fig: Figure, path, description: str) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=110, metadata={"Description": description, "Software": None})


def s0_heatmap(stokes, grid: TransverseGrid, path, *, title: str = "", decimation: int = 12,
               overlay: bool = True) -> dict:
    """Normalized S0 map, optionally with the ellipse glyphs drawn on top."""
    s0 = stokes.S0
    peak = float(s0.max())
    img = s0 / peak if peak > 0 else s0
    fig = Figure(figsize=(5.4, 4.6))
    ax = fig.add_subplot()
    e = grid.extent
    half = grid.spacing / 2
    im = ax.imshow(img, origin="lower", extent=(-e - half, e + half, -e - half, e + half),
                   cmap=COLORMAP, vmin=0.0, vmax=1.0)
    fig.colorbar(im, ax=ax, label=r"$S_0/S_{0,\max}$")
    if overlay:
        r = 0.45 * decimation * grid.spacing
        for x, y, chi, psi in glyphs(stokes, grid, decimation):
            ax.add_patch(Ellipse((x, y), 2 * r * math.cos(chi), max(2 * r * abs(math.sin(chi)), 0.08 * r),
                                 angle=math.degrees(psi), fill=False, lw=0.9, ec=glyph_color(chi)))
    ax.set_xlabel("x / w")
    ax.set_ylabel("y / w")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    meta = {"colormap": COLORMAP, "handedness": HANDEDNESS, "normalization": "S0 / max(S0)",
            "decimation": decimation, "chi_split_rad": CHI_SPLIT}
    _save(fig, path, f"colormap={COLORMAP}; {HANDEDNESS}")
    return meta


def line_cut_plot(cuts, path, *, title: str = "") -> None:
    """Two panels, |W_L|^2/I0 and |W_R|^2/I0 along x, one curve per z~ > 0."""
    fig = Figure(figsize=(8.0, 3.4))
    ax_l, ax_r = fig.subplots(1, 2, sharex=True)
    shown = [c for c in cuts if c.z > 0] or list(cuts)
    for cut in shown:
        ax_l.plot(cut.x, cut.intensity_L, label=rf"$\tilde z$={cut.z:.3f}")
        ax_r.plot(cut.x, cut.intensity_R, label=rf"$\tilde z$={cut.z:.3f}")
    ax_l.set_ylabel(r"$|\Omega_L|^2/I_0$")
    ax_r.set_ylabel(r"$|\Omega_R|^2/I_0$")
    for ax in (ax_l, ax_r):
        ax.set_xlabel("x / w")
        ax.legend(fontsize=7, frameon=False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save(fig, path, HANDEDNESS)
