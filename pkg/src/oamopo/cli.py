"""Command-line interface: scenario configs in JSON, reproducible artifacts.

Subcommands
-----------
steady     quintic roots and the stable operating point, optionally scanned
           over pump and seed grids (CSV table)
free-run   seedless operating point: clipping, total intensity, Stokes family
sweep      adiabatic injection sweep along a path (CSV + JSON summary)
interfere  mutual interference frames before/after a cycle (PGM + report)
phase      solid angle and geometric phases of a closed path

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Every run writes the fully resolved configuration next to its artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema

from .dynamics import IntegrationError, OpoParams
from .geometry import SpherePath, conjugation_pair, preset_path, solid_angle
from .interference import render_cycle
from .io_utils import write_csv, write_json, write_pgm
from .modes import GridSpec, SpherePoint
from .steady import (
    SCAN_COLUMNS,
    QuinticCoeffs,
    free_running_steady,
    quintic_real_roots,
    scan_rows,
    select_stable,
    threshold,
)
from .sweep import SWEEP_COLUMNS, SweepSchedule, run_sweep, sweep_rows


class ConfigError(Exception):
    pass


DEFAULT_CONFIG = {
    "scenario": "run",
    "units": "kappa",
    "params": {"kappa_p": 1.0, "kappa": 1.0, "delta_p": 0.0, "delta": 0.0,
               "chi": 1.0, "eta_p": 1.0, "eta_s": 1.0},
    "pump": 0.5,
    "seed_intensity": 0.04,
    "injection": {"theta": math.pi / 2, "phi": 0.0},
    "path": "lune:" + repr(math.pi / 2),
    "grid": {"n": 256, "half_width": 3.0, "waist": 1.0},
    "integrator": {"dt": 0.05, "duration": 200.0},
    "sweep": {"samples": 200},
    "output_dir": "oamopo-out",
}

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {"type": "string", "minLength": 1},
        "units": {"enum": ["kappa", "absolute"]},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kappa_p": _POSITIVE, "kappa": _POSITIVE, "chi": _POSITIVE,
                "eta_p": _POSITIVE, "eta_s": _POSITIVE,
                "delta_p": {"type": "number"}, "delta": {"type": "number"},
            },
        },
        "pump": {"type": "number", "minimum": 0},
        "seed_intensity": {"type": "number", "minimum": 0},
        "injection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"theta": {"type": "number", "minimum": 0,
                                     "maximum": math.pi},
                           "phi": {"type": "number"}},
        },
        "path": {"type": ["string", "object"]},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n": {"type": "integer", "minimum": 16},
                           "half_width": _POSITIVE, "waist": _POSITIVE},
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dt": _POSITIVE, "duration": _POSITIVE},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"samples": {"type": "integer", "minimum": 2}},
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pump": {"type": "array", "items": {"type": "number",
                                                    "minimum": 0}},
                "seed_intensity": {"type": "array",
                                   "items": {"type": "number", "minimum": 0}},
            },
        },
        "output_dir": {"type": "string", "minLength": 1},
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | None, overrides: dict) -> dict:
    config = DEFAULT_CONFIG
    if path is not None:
        try:
            with open(path) as fh:
                config = _merge(config, json.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    config = _merge(config, overrides)
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config violates the schema: {exc.message}") from exc
    return config


def _resolve_units(config: dict) -> dict:
    """In 'kappa' units every rate is a multiple of the signal damping rate
    and times (dt, duration) are already in cavity lifetimes: rescale the
    rates so kappa = 1 and leave the times alone.  Field amplitudes (pump,
    seed) are invariant under this rescaling."""
    if config["units"] == "absolute":
        return config
    kappa = config["params"]["kappa"]
    if kappa == 1.0:
        return config
    out = json.loads(json.dumps(config))  # deep copy
    for name in ("kappa_p", "kappa", "delta_p", "delta", "chi", "eta_p", "eta_s"):
        out["params"][name] = config["params"][name] / kappa
    return out


def _params(config: dict) -> OpoParams:
    try:
        return OpoParams(**config["params"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _grid(config: dict) -> GridSpec:
    try:
        return GridSpec(**config["grid"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _path(config: dict) -> SpherePath:
    spec = config["path"]
    try:
        if isinstance(spec, str):
            return preset_path(spec)
        if isinstance(spec, dict) and "file" in spec:
            return SpherePath.from_csv(spec["file"],
                                       closed=spec.get("closed", True))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad path spec: {exc}") from exc
    raise ConfigError("path must be a preset name or {'file': ...}")


def _injection_point(config: dict) -> SpherePoint:
    inj = config["injection"]
    return SpherePoint(inj["theta"], inj["phi"])


def _outdir(config: dict) -> Path:
    out = Path(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", config)
    return out


def cmd_steady(config: dict, jobs: int) -> int:
    params = _params(config)
    pt = _injection_point(config)
    scan = config.get("scan", {})
    pumps = scan.get("pump", [config["pump"]])
    seeds = scan.get("seed_intensity", [config["seed_intensity"]])
    out = _outdir(config)

    if jobs > 1 and len(pumps) > 1:
        chunks = [[p] for p in pumps]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(lambda c: scan_rows(params, c, seeds, pt), chunks)
        rows = [row for chunk in results for row in chunk]
    else:
        rows = scan_rows(params, pumps, seeds, pt)
    write_csv(out / "steady_scan.csv", SCAN_COLUMNS, rows)

    q = QuinticCoeffs.from_params(params, config["pump"], config["seed_intensity"])
    roots = quintic_real_roots(q)
    stable = select_stable(roots, q)
    print(f"a={q.a!r} b={q.b!r} clip={q.clip!r}")
    print("nonnegative real roots:", " ".join(repr(x) for x in roots))
    print(f"stable |alpha_p|={stable.value!r} clipped={stable.clipped}")
    print(f"threshold pump drive: {threshold(params)!r}")
    print(f"wrote {out / 'steady_scan.csv'}")
    return 0


def cmd_free_run(config: dict) -> int:
    params = _params(config)
    family, state = free_running_steady(params, config["pump"])
    out = _outdir(config)
    payload = {
        "pump_intensity": family.I_p,
        "total_intensity": family.I_total,
        "A": family.A,
        "B": family.B,
        "delta_theta": family.delta_theta,
        "threshold_pump_drive": threshold(params),
        "above_threshold": family.I_total > 0,
    }
    write_json(out / "free_run.json", payload)
    print(f"I_p={family.I_p!r} I_total={family.I_total!r}")
    print(f"wrote {out / 'free_run.json'}")
    return 0


def cmd_sweep(config: dict) -> int:
    params = _params(config)
    # schedule duration is in lifetimes 1/kappa: an absolute-units config
    # gives duration in raw time, so convert (kappa = 1 in kappa units)
    schedule = SweepSchedule(
        path=_path(config),
        duration=config["integrator"]["duration"] * params.kappa,
        I_s_in=config["seed_intensity"],
        alpha_p_in=config["pump"],
        params=params,
        samples=config["sweep"]["samples"],
        dt=config["integrator"]["dt"],
    )
    record = run_sweep(schedule)
    out = _outdir(config)
    stem = config["scenario"]
    write_csv(out / f"{stem}_sweep.csv", SWEEP_COLUMNS, sweep_rows(record))
    write_json(out / f"{stem}_sweep_summary.json", record.summary())
    print(f"adiabaticity_error={record.adiabaticity_error!r} "
          f"mirror_error={record.mirror_error!r}")
    print(f"wrote {out / (stem + '_sweep.csv')} and summary")
    return 0


def cmd_interfere(config: dict) -> int:
    params = _params(config)
    path = _path(config)
    before, after, rotation = render_cycle(
        params, config["pump"], config["seed_intensity"], path, _grid(config))
    out = _outdir(config)
    stem = config["scenario"]
    write_pgm(out / f"{stem}_before.pgm", before)
    write_pgm(out / f"{stem}_after.pgm", after)
    pair = conjugation_pair(path)
    write_json(out / f"{stem}_rotation.json", {
        "solid_angle": solid_angle(path),
        "gamma_signal": pair.gamma_signal,
        "gamma_idler": pair.gamma_idler,
        "relative_phase": pair.relative,
        "measured_rotation": rotation,
        "predicted_rotation": pair.relative / 2.0,
    })
    print(f"measured rotation: {rotation!r} rad "
          f"(predicted {pair.relative / 2.0!r})")
    print(f"wrote {out / (stem + '_before.pgm')}, _after.pgm, _rotation.json")
    return 0


def cmd_phase(config: dict) -> int:
    path = _path(config)
    omega = solid_angle(path)
    pair = conjugation_pair(path)
    out = _outdir(config)
    write_json(out / f"{config['scenario']}_phase.json", {
        "solid_angle": omega,
        "gamma_signal": pair.gamma_signal,
        "gamma_idler": pair.gamma_idler,
        "relative_phase": pair.relative,
    })
    print(f"Omega={omega:.4f}")
    print(f"gamma_s={pair.gamma_signal:.4f}")
    print(f"gamma_i={pair.gamma_idler:+.4f}")
    return 0


def _add_global_args(parser: argparse.ArgumentParser, in_subcommand: bool):
    # present on the main parser and on every subcommand; the SUPPRESS
    # default keeps a post-subcommand absence from clobbering a value
    # given before the subcommand
    d = argparse.SUPPRESS if in_subcommand else None
    parser.add_argument("--config", default=d, help="JSON scenario configuration")
    parser.add_argument("--out", default=d,
                        help="output directory (overrides config)")
    parser.add_argument("--units", choices=["kappa", "absolute"], default=d,
                        help="interpret rates relative to kappa (default) or as-is")
    parser.add_argument("--jobs", type=int,
                        default=argparse.SUPPRESS if in_subcommand else 1,
                        help="parallel workers for parameter scans")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamopo",
        description="Injected OPO simulator in the first-order mode subspace",
    )
    _add_global_args(parser, in_subcommand=False)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    _add_global_args(common, in_subcommand=True)
    common.add_argument("--pump", type=float, help="pump drive amplitude")
    common.add_argument("--seed-intensity", type=float, dest="seed_intensity")
    common.add_argument("--scenario", help="artifact file name stem")

    p_steady = sub.add_parser("steady", parents=[common],
                              help="stationary operating point / scan table")
    p_steady.add_argument("--theta", type=float, help="injection polar angle")
    p_steady.add_argument("--phi", type=float, help="injection azimuth")
    p_steady.add_argument("--scan-pump", type=float, nargs="+")
    p_steady.add_argument("--scan-seed", type=float, nargs="+")

    sub.add_parser("free-run", parents=[common],
                   help="seedless steady state: clipping and intensity")

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="adiabatic sweep along a path")
    p_sweep.add_argument("--path", help="preset (lune:X, octant, equator)")
    p_sweep.add_argument("--duration", type=float, help="sweep length in 1/kappa")
    p_sweep.add_argument("--dt", type=float, help="integrator step")
    p_sweep.add_argument("--samples", type=int)

    p_int = sub.add_parser("interfere", parents=[common],
                           help="interference frames around a cycle")
    p_int.add_argument("--path", help="preset (lune:X, octant, equator)")
    p_int.add_argument("--grid-n", type=int, dest="grid_n")

    p_phase = sub.add_parser("phase", parents=[common],
                             help="solid angle and geometric phases of a path")
    p_phase.add_argument("--path", help="preset (lune:X, octant, equator)")
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict:
    over: dict = {}
    if args.out:
        over["output_dir"] = args.out
    if args.units:
        over["units"] = args.units
    for attr, key in (("pump", "pump"), ("seed_intensity", "seed_intensity"),
                      ("scenario", "scenario")):
        value = getattr(args, attr, None)
        if value is not None:
            over[key] = value
    if getattr(args, "path", None) is not None:
        over["path"] = args.path
    if getattr(args, "theta", None) is not None:
        over.setdefault("injection", {})["theta"] = args.theta
    if getattr(args, "phi", None) is not None:
        over.setdefault("injection", {})["phi"] = args.phi
    if getattr(args, "duration", None) is not None:
        over.setdefault("integrator", {})["duration"] = args.duration
    if getattr(args, "dt", None) is not None:
        over.setdefault("integrator", {})["dt"] = args.dt
    if getattr(args, "samples", None) is not None:
        over.setdefault("sweep", {})["samples"] = args.samples
    if getattr(args, "grid_n", None) is not None:
        over.setdefault("grid", {})["n"] = args.grid_n
    scan_pump = getattr(args, "scan_pump", None)
    scan_seed = getattr(args, "scan_seed", None)
    if scan_pump or scan_seed:
        over["scan"] = {}
        if scan_pump:
            over["scan"]["pump"] = scan_pump
        if scan_seed:
            over["scan"]["seed_intensity"] = scan_seed
    return over


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, _overrides_from_args(args))
        config = _resolve_units(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "steady":
            return cmd_steady(config, args.jobs)
        if args.command == "free-run":
            return cmd_free_run(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "interfere":
            return cmd_interfere(config)
        if args.command == "phase":
            return cmd_phase(config)
        raise ConfigError(f"unknown command {args.command}")  # unreachable
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, ValueError, NotImplementedError,
            AssertionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
