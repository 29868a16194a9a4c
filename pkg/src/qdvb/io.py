"""Binary grid dumps with JSON sidecars.

Real grids are stored as little-endian float64, row-major.  Complex grids
are stored with real and imaginary parts interleaved, i.e. a trailing
axis of length 2.  The sidecar ``<name>.json`` carries shape, dtype,
geometry, units and provenance so files can be read without this package.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__

FORMAT = "qdvb-grid/1"


def _geometry(grid) -> dict:
    return {"nx": grid.nx, "ny": grid.ny, "extent_w": grid.extent, "spacing_w": grid.spacing,
            "x0_w": float(grid.x[0]), "y0_w": float(grid.y[0]), "row_axis": "y", "col_axis": "x"}


def save_grid(path, data, grid=None, *, units: str = "", provenance: dict | None = None) -> Path:
    path = Path(path)
    data = np.asarray(data)
    is_complex = np.iscomplexobj(data)
    raw = np.stack([data.real, data.imag], axis=-1) if is_complex else data
    np.ascontiguousarray(raw, dtype="<f8").tofile(path)
    meta = {
        "format": FORMAT,
        "dtype": "<f8",
        "order": "C",
        "shape": list(data.shape),
        "complex": bool(is_complex),
        "units": units,
        "provenance": {"package": "qdvb", "version": __version__, **(provenance or {})},
    }
    if grid is not None:
        meta["geometry"] = _geometry(grid)
    path.with_name(path.name + ".json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return path


def load_grid(path):
    """Return (array, sidecar dict)."""
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    shape = tuple(meta["shape"])
    raw = np.fromfile(path, dtype="<f8")
    if meta["complex"]:
        raw = raw.reshape(shape + (2,))
        return raw[..., 0] + 1j * raw[..., 1], meta
    return raw.reshape(shape), meta


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True, allow_nan=True) + "\n")
