import math
import xml.etree.ElementTree as ET
from dataclasses import replace

import numpy as np
import pytest
from PIL import Image

from qdvb.pipeline import simulate
from qdvb.plotting import (
    COLORMAP,
    COLORS,
    HANDEDNESS,
    CHI_SPLIT,
    ellipse_svg,
    glyph_color,
    glyphs,
    lattice_indices,
    line_cut_plot,
    s0_heatmap,
)
from qdvb.propagation import LineCut
from qdvb.scenario import preset
from qdvb.structured_light import TransverseGrid, ellipse_field, stokes

SVG = "{http://www.w3.org/2000/svg}"
GRID = TransverseGrid(41, 41, 3.0)


def _ellipses(svg):
    return ET.fromstring(svg).findall(f"{SVG}ellipse")


def test_glyph_color_thresholds():
    assert glyph_color(math.pi / 4) == COLORS["left"]
    assert glyph_color(-math.pi / 4) == COLORS["right"]
    assert glyph_color(0.0) == COLORS["linear"]
    assert glyph_color(CHI_SPLIT) == COLORS["linear"]
    assert glyph_color(np.nextafter(CHI_SPLIT, 1)) == COLORS["left"]


def test_lattice_anchored_on_centre():
    idx = lattice_indices(41, 6)
    assert 20 in idx and np.all(np.diff(idx) == 6)
    assert idx[0] >= 0 and idx[-1] <= 40


def test_dark_frame_gives_empty_svg():
    z = np.zeros((GRID.ny, GRID.nx))
    svg = ellipse_svg(stokes(z, z), GRID, 5)
    assert _ellipses(svg) == []
    assert ET.fromstring(svg).find(f"{SVG}desc") is not None


def test_uniform_left_circular_frame():
    e_l = np.ones((GRID.ny, GRID.nx), dtype=complex)
    svg = ellipse_svg(stokes(e_l, np.zeros_like(e_l)), GRID, 5)
    els = _ellipses(svg)
    assert len(els) == len(lattice_indices(41, 5)) ** 2
    for el in els:
        assert el.get("stroke") == COLORS["left"]
        assert float(el.get("rx")) == pytest.approx(float(el.get("ry")), rel=1e-3)


def test_linear_glyph_orientation():
    e_l = np.ones((GRID.ny, GRID.nx), dtype=complex)
    e_r = np.exp(1j * math.pi / 2) * e_l
    g = glyphs(stokes(e_l, e_r), GRID, 10)
    assert g and all(abs(chi) < 1e-12 and psi == pytest.approx(math.pi / 4) for *_, chi, psi in g)
    svg = ellipse_svg(stokes(e_l, e_r), GRID, 10)
    el = _ellipses(svg)[0]
    assert el.get("stroke") == COLORS["linear"]
    assert el.get("transform").startswith("rotate(-45.000")


@pytest.fixture(scope="module")
def fig3a_frame(art5):
    cfg = replace(preset("fig3a"), grid=GRID, n_steps=68)
    _, res, _ = simulate(cfg, artifacts=art5)
    return stokes(res.final.omega_L, res.final.omega_R)


def test_fig3a_polarization_pattern(fig3a_frame):
    # left-circular centre, a right-handed (chi < 0) ring where |W_R| > |W_L|, left again outside
    st = fig3a_frame
    chi = ellipse_field(st).chi
    cy, cx = GRID.center_index()
    row = chi[cy, cx:]
    assert glyph_color(row[0]) == COLORS["left"]
    assert glyph_color(row[-1]) == COLORS["left"]
    k = int(np.argmin(row))
    assert 0 < k < row.size - 1 and row[k] < 0
    assert glyph_color(row[k]) != COLORS["left"]
    crossings = np.flatnonzero(np.diff(np.sign(row)) != 0)
    assert crossings.size == 2
    for c in crossings:
        j = c if abs(row[c]) < abs(row[c + 1]) else c + 1
        assert glyph_color(row[j]) == COLORS["linear"]
    # ellipticity is constant on a ring, only orientation turns
    r = GRID.x[cx + k]
    ring = [c for x, y, c, _ in glyphs(st, GRID, 1) if abs(math.hypot(x, y) - r) < 0.2 * GRID.spacing]
    assert ring and np.ptp(ring) < 0.05


def test_heatmap_metadata(tmp_path, fig3a_frame):
    p = tmp_path / "s0.png"
    meta = s0_heatmap(fig3a_frame, GRID, p, title="t", decimation=6)
    assert meta["colormap"] == COLORMAP and meta["handedness"] == HANDEDNESS
    info = Image.open(p).info
    assert COLORMAP in info["Description"] and "y up" in info["Description"]


def test_svg_glyph_colors_follow_chi(fig3a_frame):
    g = glyphs(fig3a_frame, GRID, 4)
    els = _ellipses(ellipse_svg(fig3a_frame, GRID, 4))
    assert len(els) == len(g)
    assert [e.get("stroke") for e in els] == [glyph_color(chi) for *_, chi, _ in g]


def test_line_cut_plot(tmp_path):
    x = np.linspace(-3, 3, 11)
    cuts = [LineCut(x, np.exp(-x**2), 0 * x, 0.0), LineCut(x, np.exp(-x**2), x**2, 0.02)]
    p = tmp_path / "cuts.png"
    line_cut_plot(cuts, p, title="t")
    assert Image.open(p).size[0] > 0
