"""Command-line entry point.

Subcommands:

* ``envelope``    - pitch-torque boundary sweep per posture, CSV + ratio report
* ``takeoff``     - closed-loop takeoff run, log CSV + events JSON + summary
* ``trim``        - hover trim report as key=value lines
* ``wrench-eval`` - one-shot wrench evaluation as key=value lines

Angles are degrees at this boundary, SI units otherwise. Exit codes: 0 ok,
2 config/usage error, 3 infeasible geometry, 4 simulation divergence. Every
run writes a manifest naming its outputs and their hashes; outputs are
written atomically (temp file + rename) and contain no timestamps, so a
rerun with identical inputs is byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

from . import __version__
from .config import (
    ConfigError,
    envelope_settings_from_config,
    load_config,
    posture_from_config,
    scenario_from_config,
)
from .controller import ControlMode
from .envelope import (
    EnvelopeConstraint,
    EnvelopeInfeasibleError,
    envelope_sweep,
    tvc_dt_ratio,
    write_envelope_csv,
)
from .robot import (
    FanLimits,
    Posture,
    UnknownPostureError,
    builtin_posture,
    geometry_from_posture,
)
from .sim import DivergenceError, run_scenario
from .trim import NoTrimError, hover_trim
from .wrench import FanState, total_wrench

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        values = load_config(args.config) if args.config else {}
        os.makedirs(args.out, exist_ok=True)
        return args.func(args, values)
    except (ConfigError, UnknownPostureError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnvelopeInfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NoTrimError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvcsim",
        description="Takeoff dynamics and thrust-vector control analysis",
    )
    parser.add_argument("--config", help="flat dotted-key config file")
    parser.add_argument("--out", default=".", help="output directory (default: cwd)")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="tabular output format")
    sub = parser.add_subparsers(dest="command", required=True)

    p_env = sub.add_parser("envelope", help="DT vs TVC pitch-torque boundaries")
    p_env.add_argument("--postures", default="P1,P2,P3",
                       help="comma-separated posture labels")
    p_env.set_defaults(func=cmd_envelope)

    p_take = sub.add_parser("takeoff", help="closed-loop takeoff simulation")
    p_take.add_argument("--mode", choices=[m.value for m in ControlMode],
                        help="override the controller condition")
    p_take.set_defaults(func=cmd_takeoff)

    p_trim = sub.add_parser("trim", help="hover trim report")
    p_trim.add_argument("--posture", default="P1")
    p_trim.add_argument("--waist-differential", action="store_true",
                        help="trim with feet up and a waist thrust split instead")
    p_trim.set_defaults(func=cmd_trim)

    p_we = sub.add_parser("wrench-eval", help="evaluate the wrench for one fan state")
    p_we.add_argument("--posture", default="P1")
    p_we.add_argument("--thrust-ff", type=float, default=0.0, help="front waist fan [N]")
    p_we.add_argument("--thrust-fb", type=float, default=0.0, help="back waist fan [N]")
    p_we.add_argument("--thrust-fl", type=float, default=0.0, help="left foot fan [N]")
    p_we.add_argument("--thrust-fr", type=float, default=0.0, help="right foot fan [N]")
    p_we.add_argument("--theta-l", type=float, default=0.0, help="left foot pitch [deg]")
    p_we.add_argument("--theta-r", type=float, default=0.0, help="right foot pitch [deg]")
    p_we.add_argument("--theta-pitch", type=float, default=0.0, help="body pitch [deg]")
    p_we.set_defaults(func=cmd_wrench_eval)
    return parser


def _atomic_write(path: str, data: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def _write_manifest(out_dir, name, config_path, resolved, outputs, started):
    manifest = {
        "tool": "tvcsim",
        "version": __version__,
        "command": name,
        "resolved_config": resolved,
        "input_hashes": {
            "config": _sha256(config_path) if config_path else None,
        },
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
        "wall_clock_s": round(time.monotonic() - started, 3),
    }
    path = os.path.join(out_dir, f"{name}_manifest.json")
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _rows_as_json(header, rows) -> str:
    return json.dumps({"header": list(header), "rows": [list(r) for r in rows]},
                      indent=2) + "\n"


def _resolve_posture(label: str, values) -> Posture:
    return posture_from_config(values, label) or builtin_posture(label)


def _resolve_geometry(label: str, values, settings):
    return geometry_from_posture(
        _resolve_posture(label, values),
        mass_total=settings["mass_total"],
        fan_spacing_waist=settings["fan_spacing_waist"],
        fan_spacing_feet=settings["fan_spacing_feet"],
        fan_mass=settings["fan_mass"],
        com_y=settings["com_y"],
    )


def cmd_envelope(args, values) -> int:
    started = time.monotonic()
    settings = envelope_settings_from_config(values)
    postures = [p.strip() for p in args.postures.split(",") if p.strip()]
    if not postures:
        raise ConfigError("no postures given")
    limits = FanLimits(thrust_max_per_fan=settings["thrust_max_per_fan"])
    outputs = []
    reports = []
    for name in postures:
        posture = _resolve_posture(name, values)
        geo = _resolve_geometry(name, values, settings)
        constraint = EnvelopeConstraint.hover(geo, posture, limits)
        if settings["min_vertical_force"] is not None:
            constraint = EnvelopeConstraint(
                min_vertical_force=settings["min_vertical_force"],
                per_fan_max=constraint.per_fan_max,
                foot_angle_range=constraint.foot_angle_range,
            )
        # the comparison is meaningless if the robot cannot even hover level
        ratio_max, ratio_min = tvc_dt_ratio(geo, constraint, theta_pitch=0.0)
        points = envelope_sweep(
            geo, constraint,
            theta_pitch_range=(settings["theta_min"], settings["theta_max"]),
            n_points=settings["n_points"],
        )
        path = os.path.join(args.out, f"envelope_{name}.{args.format}")
        if args.format == "csv":
            tmp = path + ".tmp"
            write_envelope_csv(points, tmp)
            os.replace(tmp, path)
        else:
            from .envelope import ENVELOPE_CSV_HEADER
            rows = []
            for p in points:
                row = [math.degrees(p.theta_pitch)]
                for point in (p.dt, p.tvc):
                    row.extend([math.nan, math.nan] if point is None
                               else [point.tau_min, point.tau_max])
                row.append(1 if (p.dt and p.tvc) else 0)
                rows.append(row)
            _atomic_write(path, _rows_as_json(ENVELOPE_CSV_HEADER, rows))
        outputs.append(path)
        reports.append((name, geo, ratio_max, ratio_min))

    for name, geo, ratio_max, ratio_min in reports:
        print(f"{name}: geometry mass={geo.mass_total} kg L={geo.fan_spacing_waist} m "
              f"L_f={geo.fan_spacing_feet} m com=({geo.com_body[0]:.3f}, "
              f"{geo.com_body[2]:.3f}) m feet=({geo.fan_foot_x:.3f}, {geo.fan_foot_z:.3f}) m")
        print(f"{name}: tvc/dt ratio @0deg: tau_max {ratio_max:.2f}, |tau_min| {ratio_min:.2f}")
    manifest = _write_manifest(args.out, "envelope", args.config,
                               {"settings": {k: v for k, v in settings.items()},
                                "postures": postures}, outputs, started)
    print(f"wrote {len(outputs)} envelope file(s) + {os.path.basename(manifest)}")
    return EXIT_OK


def cmd_takeoff(args, values) -> int:
    started = time.monotonic()
    overrides = {}
    if args.mode:
        overrides["mode"] = ControlMode.parse(args.mode)
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = scenario_from_config(values, **overrides)

    diverged = False
    try:
        log = run_scenario(cfg)
    except DivergenceError as err:
        log = err.log
        diverged = True

    log_path = os.path.join(args.out, f"takeoff_log.{args.format}")
    if args.format == "csv":
        tmp = log_path + ".tmp"
        log.write_csv(tmp)
        os.replace(tmp, log_path)
    else:
        _atomic_write(log_path, _rows_as_json(log.header, log.rows))
    events_path = os.path.join(args.out, "takeoff_events.json")
    _atomic_write(events_path, log.events_json() + "\n")
    _write_manifest(args.out, "takeoff", args.config, log.events["config"],
                    [log_path, events_path], started)

    ev = log.events
    liftoff = ev["liftoff_time_s"]
    alt = ev["altitude_at_2s_m"]
    print(
        f"mode={cfg.mode.value} liftoff_t={'never' if liftoff is None else f'{liftoff:.3f} s'} "
        f"altitude@2s={'n/a' if alt is None else f'{alt:.3f} m'} "
        f"max|pitch|={ev['max_abs_pitch_deg']:.1f} deg max|yaw|={ev['max_abs_yaw_deg']:.1f} deg"
        + (" [DIVERGED]" if diverged else "")
    )
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_trim(args, values) -> int:
    started = time.monotonic()
    settings = envelope_settings_from_config(values)
    geo = _resolve_geometry(args.posture, values, settings)
    limits = FanLimits(thrust_max_per_fan=settings["thrust_max_per_fan"])
    fs, theta_pitch = hover_trim(geo, equal_thrust=not args.waist_differential,
                                 limits=limits)
    w = total_wrench(fs, geo, theta_pitch)
    residual = math.sqrt(float(w.force_world @ w.force_world)
                         + float(w.torque_world @ w.torque_world))
    print(f"posture={args.posture}")
    print(f"f_front_n={fs.f_front:.6f}")
    print(f"f_back_n={fs.f_back:.6f}")
    print(f"f_left_n={fs.f_left:.6f}")
    print(f"f_right_n={fs.f_right:.6f}")
    print(f"foot_angle_left_deg={math.degrees(fs.theta_left):.6f}")
    print(f"foot_angle_right_deg={math.degrees(fs.theta_right):.6f}")
    print(f"theta_pitch_deg={math.degrees(theta_pitch):.6f}")
    print(f"residual_wrench_norm={residual:.3e}")
    _write_manifest(args.out, "trim", args.config,
                    {"posture": args.posture,
                     "waist_differential": args.waist_differential,
                     "settings": settings}, [], started)
    return EXIT_OK


def cmd_wrench_eval(args, values) -> int:
    started = time.monotonic()
    settings = envelope_settings_from_config(values)
    geo = _resolve_geometry(args.posture, values, settings)
    fs = FanState(
        f_front=args.thrust_ff, f_back=args.thrust_fb,
        f_left=args.thrust_fl, f_right=args.thrust_fr,
        theta_left=math.radians(args.theta_l),
        theta_right=math.radians(args.theta_r),
    )
    w = total_wrench(fs, geo, math.radians(args.theta_pitch))
    print(f"fx={w.force_world[0]:.6f}")
    print(f"fy={w.force_world[1]:.6f}")
    print(f"fz={w.force_world[2]:.6f}")
    print(f"tx={w.torque_world[0]:.6f}")
    print(f"ty={w.torque_world[1]:.6f}")
    print(f"tz={w.torque_world[2]:.6f}")
    print(f"ty1={w.t_y1:.6f}")
    print(f"ty2={w.t_y2:.6f}")
    print(f"ty3={w.t_y3:.6f}")
    _write_manifest(args.out, "wrench_eval", args.config,
                    {"posture": args.posture,
                     "fan_state": {"f_front": args.thrust_ff, "f_back": args.thrust_fb,
                                   "f_left": args.thrust_fl, "f_right": args.thrust_fr,
                                   "theta_l_deg": args.theta_l, "theta_r_deg": args.theta_r,
                                   "theta_pitch_deg": args.theta_pitch}}, [], started)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
