"""Command-line entry point ``qdvb``.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, PixelError, QdvbError, StageError
from .phonon_bath import PhononBath, franck_condon

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _classify(exc: BaseException) -> int:
    while isinstance(exc, (StageError, PixelError)):
        exc = exc.cause
    if isinstance(exc, ArithmeticError):
        return EXIT_NUMERICAL
    if isinstance(exc, (ValueError, TypeError, KeyError, OSError)):
        return EXIT_INVALID
    return EXIT_NUMERICAL


def cmd_bmean(args) -> int:
    print("T_K,B_mean")
    for t in args.temperatures:
        bath = PhononBath(alpha_p=args.alpha_p, omega_b=args.omega_b, temperature=t)
        print(f"{t:g},{franck_condon(bath):.6f}")
    print(f"disabled,{franck_condon(PhononBath(enabled=False)):.6f}")
    return EXIT_OK


def cmd_presets(args) -> int:
    from .scenario import PRESETS, preset, render_config

    if args.show:
        sys.stdout.write(render_config(preset(args.show)))
        return EXIT_OK
    for name, cfg in PRESETS.items():
        print(f"{name:9s} l=({cfg.probe.oam},{cfg.control1.oam},{cfg.control2.oam}) "
              f"theta1={cfg.control1.phase:.4f} z={cfg.z_final:g} T={cfg.bath.temperature:g}K"
              f"{'' if cfg.bath.enabled else ' bath-off'}")
    return EXIT_OK


def _load_config(args):
    from .scenario import parse_config, preset
    from .structured_light import TransverseGrid

    if args.config:
        cfg = parse_config(Path(args.config).read_text())
    else:
        cfg = preset(args.preset)
    if args.grid:
        cfg = replace(cfg, grid=TransverseGrid(args.grid, args.grid, cfg.grid.extent))
    if args.steps:
        cfg = replace(cfg, n_steps=args.steps)
    if args.reduction:
        cfg = replace(cfg, reduction=args.reduction)
    try:
        cfg.propagation().snapshot_steps()
    except ValueError as exc:
        raise ConfigError("propagation", str(exc)) from None
    return cfg


def cmd_run(args) -> int:
    from .pipeline import run

    cfg = _load_config(args)
    out = Path(args.out) if args.out else Path(cfg.output_dir or Path("runs") / cfg.name)
    report = run(cfg, out, threads=args.threads, figures=not args.no_figures)
    fin = report.final
    summary = {
        "name": report.name,
        "out": str(out),
        "b_mean": round(report.b_mean, 6),
        "label": report.label,
        "z_final": fin.z,
        "ratio": fin.ratio,
        "winding_R": fin.winding_R,
        "expected_l_R": report.l_generated,
        "identity_propagation": report.identity_propagation,
        "invariants_ok": report.invariants_ok,
        "seconds": round(sum(report.timings.values()), 2),
    }
    print(json.dumps(summary, indent=1))
    return EXIT_OK


def cmd_render(args) -> int:
    from .pipeline import render

    meta = render(args.from_dir)
    print(json.dumps(meta, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdvb", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bmean", help="Franck-Condon factor <B> versus temperature")
    b.add_argument("temperatures", nargs="*", type=float, default=[0.0, 5.0, 10.0, 20.0], metavar="T_K")
    b.add_argument("--alpha-p", type=float, default=1.42e-3, help="coupling, gamma_n^-2")
    b.add_argument("--omega-b", type=float, default=10.0, help="cutoff, gamma_n")
    b.set_defaults(func=cmd_bmean)

    r = sub.add_parser("run", help="run a preset or configuration file")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset")
    src.add_argument("--config", help="YAML scenario file")
    r.add_argument("--out", help="output directory (default runs/<name>)")
    r.add_argument("--threads", type=int, help="worker threads for the per-pixel solves")
    r.add_argument("--grid", type=int, help="override grid to N x N (odd)")
    r.add_argument("--steps", type=int, help="override the number of z steps")
    r.add_argument("--reduction", choices=("vortex", "none"))
    r.add_argument("--no-figures", action="store_true", help="write data files only")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("render", help="redraw figures of a finished run")
    d.add_argument("--from", dest="from_dir", required=True)
    d.set_defaults(func=cmd_render)

    ps = sub.add_parser("presets", help="list figure presets")
    ps.add_argument("--list", action="store_true", help="one line per preset (default)")
    ps.add_argument("--show", metavar="NAME", help="print a preset as YAML")
    ps.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (QdvbError, ValueError, ArithmeticError, OSError) as exc:
        print(f"qdvb: error: {exc}", file=sys.stderr)
        return _classify(exc)


if __name__ == "__main__":
    sys.exit(main())
