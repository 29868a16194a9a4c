"""Scenario configuration: YAML schema, validation and figure presets.

Keys carry their unit as a suffix (``_K`` kelvin, ``_gn`` multiples of
gamma_n, ``_w`` multiples of the common waist, ``_rad`` radians); bare
names are dimensionless.  Unknown keys are rejected and every error names
the dotted path of the offending key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import yaml

from .errors import ConfigError
from .phonon_bath import PhononBath
from .propagation import PropagationConfig
from .qd_dynamics import QdParams
from .structured_light import LgInputSpec, TransverseGrid

REQUIRED = object()


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    bath: PhononBath
    params: QdParams
    probe: LgInputSpec
    control1: LgInputSpec
    control2: LgInputSpec
    grid: TransverseGrid = field(default_factory=TransverseGrid)
    z_final: float = 0.04
    n_steps: int = 400
    snapshots: tuple = ()
    reduction: str = "vortex"
    tcl_bare_hs: bool = False
    medium_off: bool = False
    table_delta_max: float = 20.0
    table_points: int = 4001
    output_dir: str | None = None
    decimation: int = 12

    @property
    def l_generated(self) -> int:
        return self.probe.oam + self.control1.oam - self.control2.oam

    @property
    def theta_rel(self) -> float:
        """Synthesis relative phase between the circular components."""
        return self.control1.phase - self.control2.phase

    def propagation(self) -> PropagationConfig:
        return PropagationConfig(
            grid=self.grid, probe=self.probe, control1=self.control1, control2=self.control2,
            params=self.params, bath=self.bath, z_final=self.z_final, n_steps=self.n_steps,
            snapshots=self.snapshots, medium_off=self.medium_off, tcl_bare_hs=self.tcl_bare_hs,
            reduction=self.reduction, table_delta_max=self.table_delta_max,
            table_points=self.table_points,
        )


# --- schema --------------------------------------------------------------

_BEAM = {"omega0_gn": (float, REQUIRED), "oam": (int, 0), "waist_w": (float, 1.0), "phase_rad": (float, 0.0)}

SCHEMA = {
    "name": (str, "custom"),
    "bath": {
        "enabled": (bool, True),
        "temperature_K": (float, 5.0),
        "alpha_p_gn2": (float, 1.42e-3),
        "omega_b_gn": (float, 10.0),
    },
    "medium": {
        "gamma1_gn": (float, 0.01),
        "gamma2_gn": (float, 0.01),
        "gamma_d_gn": (float, 0.01),
        "delta_p_gn": (float, 0.0),
        "delta_c_gn": (float, 0.0),
        "density_m3": (float, 1.5e19),
        "wavelength_m": (float, 9.2e-7),
    },
    "fields": {"probe": _BEAM, "control1": _BEAM, "control2": _BEAM},
    "grid": {"nx": (int, 201), "ny": (int, 201), "extent_w": (float, 3.0)},
    "propagation": {
        "z_final": (float, REQUIRED),
        "n_steps": (int, 400),
        "snapshots": (list, []),
        "reduction": (str, "vortex"),
        "tcl_bare_hs": (bool, False),
        "medium_off": (bool, False),
    },
    "table": {"delta_max_gn": (float, 20.0), "n_points": (int, 4001)},
    "output": {"directory": (str, None), "decimation": (int, 12)},
}


def _coerce(value, kind, path):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(path, "must be finite")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        return [_coerce(v, float, f"{path}[{i}]") for i, v in enumerate(value)]
    raise TypeError(kind)


def _resolve(data, schema, prefix=""):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(prefix or "<root>", "expected a mapping")
    for key in data:
        if key not in schema:
            raise ConfigError(f"{prefix}{key}", "unknown key")
    out = {}
    for key, spec in schema.items():
        path = f"{prefix}{key}"
        if isinstance(spec, dict):
            out[key] = _resolve(data.get(key), spec, path + ".")
            continue
        kind, default = spec
        value = data.get(key)
        if value is None:
            if default is REQUIRED:
                raise ConfigError(path, "required key is missing")
            out[key] = default
        else:
            out[key] = _coerce(value, kind, path)
    return out


def _build(path, ctor, **kw):
    try:
        return ctor(**kw)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _beam(d, path):
    return _build(path, LgInputSpec, amplitude=d["omega0_gn"], oam=d["oam"], waist=d["waist_w"], phase=d["phase_rad"])


def from_dict(data) -> ScenarioConfig:
    r = _resolve(data, SCHEMA)
    b, m, p, g, f = r["bath"], r["medium"], r["propagation"], r["grid"], r["fields"]
    if b["temperature_K"] < 0:
        raise ConfigError("bath.temperature_K", "temperature must be >= 0 K")
    bath = _build("bath", PhononBath, alpha_p=b["alpha_p_gn2"], omega_b=b["omega_b_gn"],
                  temperature=b["temperature_K"], enabled=b["enabled"])
    for key in ("gamma1_gn", "gamma2_gn", "gamma_d_gn", "density_m3"):
        if m[key] < 0:
            raise ConfigError(f"medium.{key}", "must be >= 0")
    if m["wavelength_m"] <= 0:
        raise ConfigError("medium.wavelength_m", "must be > 0")
    params = QdParams(m["gamma1_gn"], m["gamma2_gn"], m["gamma_d_gn"], m["delta_p_gn"],
                      m["delta_c_gn"], m["density_m3"], m["wavelength_m"])
    grid = _build("grid", TransverseGrid, nx=g["nx"], ny=g["ny"], extent=g["extent_w"])
    if r["output"]["decimation"] < 1:
        raise ConfigError("output.decimation", "must be >= 1")
    if r["table"]["n_points"] < 5 or r["table"]["n_points"] % 2 == 0:
        raise ConfigError("table.n_points", "must be an odd count >= 5")
    if r["table"]["delta_max_gn"] <= 0:
        raise ConfigError("table.delta_max_gn", "must be > 0")
    cfg = ScenarioConfig(
        name=r["name"],
        bath=bath,
        params=params,
        probe=_beam(f["probe"], "fields.probe"),
        control1=_beam(f["control1"], "fields.control1"),
        control2=_beam(f["control2"], "fields.control2"),
        grid=grid,
        z_final=p["z_final"],
        n_steps=p["n_steps"],
        snapshots=tuple(p["snapshots"]),
        reduction=p["reduction"],
        tcl_bare_hs=p["tcl_bare_hs"],
        medium_off=p["medium_off"],
        table_delta_max=r["table"]["delta_max_gn"],
        table_points=r["table"]["n_points"],
        output_dir=r["output"]["directory"],
        decimation=r["output"]["decimation"],
    )
    try:
        cfg.propagation().snapshot_steps()
    except ValueError as exc:
        raise ConfigError("propagation", str(exc)) from None
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"not valid YAML: {exc}") from None
    return from_dict(data)


def to_dict(cfg: ScenarioConfig) -> dict:
    def beam(s: LgInputSpec):
        return {"omega0_gn": float(s.amplitude), "oam": int(s.oam), "waist_w": float(s.waist), "phase_rad": float(s.phase)}

    return {
        "name": cfg.name,
        "bath": {
            "enabled": cfg.bath.enabled,
            "temperature_K": float(cfg.bath.temperature),
            "alpha_p_gn2": float(cfg.bath.alpha_p),
            "omega_b_gn": float(cfg.bath.omega_b),
        },
        "medium": {
            "gamma1_gn": float(cfg.params.gamma1),
            "gamma2_gn": float(cfg.params.gamma2),
            "gamma_d_gn": float(cfg.params.gamma_d),
            "delta_p_gn": float(cfg.params.delta_p),
            "delta_c_gn": float(cfg.params.delta_c),
            "density_m3": float(cfg.params.density),
            "wavelength_m": float(cfg.params.wavelength),
        },
        "fields": {"probe": beam(cfg.probe), "control1": beam(cfg.control1), "control2": beam(cfg.control2)},
        "grid": {"nx": cfg.grid.nx, "ny": cfg.grid.ny, "extent_w": float(cfg.grid.extent)},
        "propagation": {
            "z_final": float(cfg.z_final),
            "n_steps": cfg.n_steps,
            "snapshots": [float(z) for z in cfg.snapshots],
            "reduction": cfg.reduction,
            "tcl_bare_hs": cfg.tcl_bare_hs,
            "medium_off": cfg.medium_off,
        },
        "table": {"delta_max_gn": float(cfg.table_delta_max), "n_points": cfg.table_points},
        "output": {"directory": cfg.output_dir, "decimation": cfg.decimation},
    }


def render_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=False)


# --- presets -------------------------------------------------------------

def _fp_beam(oam1: int, theta1: float = 0.0, *, w_probe=1.0, w_ctrl=1.7, l_probe=0):
    return dict(
        probe=LgInputSpec(0.005, l_probe, w_probe),
        control1=LgInputSpec(0.01, oam1, w_ctrl, theta1),
        control2=LgInputSpec(0.05, 0, w_ctrl),
    )


def _base(name, z_final, snapshots=(), temperature=5.0, enabled=True, **beams):
    return ScenarioConfig(
        name=name,
        bath=PhononBath(temperature=temperature, enabled=enabled),
        params=QdParams(),
        z_final=z_final,
        snapshots=tuple(snapshots),
        **beams,
    )


_FIG2_SNAPS = (0.030, 0.034, 0.040)


def _presets():
    p = {
        "fig2": _base("fig2", 0.040, _FIG2_SNAPS, **_fp_beam(1)),
        "fig3a": _base("fig3a", 0.034, **_fp_beam(1)),
        "fig3b": _base("fig3b", 0.034, **_fp_beam(-1)),
        "fig3c": _base("fig3c", 0.040, **_fp_beam(-3)),
    }
    for tag, theta in (("d", 0.0), ("e", math.pi), ("f", math.pi / 2)):
        p[f"fig3{tag}"] = _base(f"fig3{tag}", 0.040, **_fp_beam(2, theta, w_probe=0.8, w_ctrl=1.0, l_probe=-1))
    for deg in (0, 90, 180, 270):
        p[f"fig4_{deg}"] = _base(f"fig4_{deg}", 0.034, **_fp_beam(1, math.radians(deg)))
    p["fig5_0"] = replace(p["fig2"], name="fig5_0", bath=PhononBath(temperature=0.0, enabled=False))
    for t in (5, 10, 20):
        p[f"fig5_{t}"] = replace(p["fig2"], name=f"fig5_{t}", bath=PhononBath(temperature=float(t)))
    return p


PRESETS = _presets()


def preset_names():
    return list(PRESETS)


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
