"""Flat dotted-key configuration files.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored. Keys are dotted paths (``geometry.mass_kg``), values are
scalars. Units are SI except angles, which are degrees in files. Unknown
keys are hard errors so typos cannot silently fall back to defaults.

Every key is optional; the builtin postures and defaults work with no file
at all. The full schema is documented in the README and in SCHEMA below.
"""

from __future__ import annotations

import math

import numpy as np

from .controller import ControlMode, ControllerGains, ThrustRamp
from .robot import FanLimits, Posture, builtin_posture
from .sim import Perturbation, ScenarioConfig
from .spatial import EulerAngles


class ConfigError(ValueError):
    """Malformed config file, unknown key, or invalid value."""


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes", "on"):
        return True
    if text.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (type, help)
SCHEMA: dict[str, tuple] = {
    "posture": (str, "takeoff posture label: P1, P2, or P3"),
    "posture.com_x_m": (float, "override: CoM sagittal x"),
    "posture.com_z_m": (float, "override: CoM sagittal z"),
    "posture.foot_x_m": (float, "override: foot fan x"),
    "posture.foot_z_m": (float, "override: foot fan z"),
    "posture.foot_pitch_min_deg": (float, "override: foot pitch range floor"),
    "posture.foot_pitch_max_deg": (float, "override: foot pitch range ceiling"),
    "mode": (str, "controller condition: both-on, pitch-only, or all-off"),
    "geometry.mass_kg": (float, "total robot mass"),
    "geometry.waist_fan_spacing_m": (float, "front-to-back waist fan distance L"),
    "geometry.foot_fan_spacing_m": (float, "left-to-right foot fan distance L_f"),
    "geometry.fan_mass_kg": (float, "per-fan mass for the inertia surrogate"),
    "geometry.com_y_m": (float, "lateral CoM offset override"),
    "limits.thrust_max_per_fan_n": (float, "per-fan thrust cap"),
    "limits.thrust_min_n": (float, "per-fan thrust floor"),
    "limits.foot_pitch_rate_max_rad_s": (float, "ankle slew limit"),
    "limits.thrust_time_constant_s": (float, "fan spool-up lag, 0 = ideal"),
    "controller.kp_pitch": (float, "pitch loop P gain (rad command per rad error)"),
    "controller.kd_pitch": (float, "pitch loop D gain"),
    "controller.kp_yaw": (float, "yaw loop P gain"),
    "controller.kd_yaw": (float, "yaw loop D gain"),
    "controller.ki_pitch": (float, "optional pitch I gain, default 0"),
    "controller.ki_yaw": (float, "optional yaw I gain, default 0"),
    "controller.natural_freq_pitch_rad_s": (float, "pole placement wn when gains are auto-tuned"),
    "controller.natural_freq_yaw_rad_s": (float, "pole placement wn when gains are auto-tuned"),
    "controller.damping_ratio": (float, "pole placement zeta when gains are auto-tuned"),
    "controller.setpoint_pitch_deg": (float, "attitude setpoint"),
    "controller.setpoint_yaw_deg": (float, "attitude setpoint"),
    "controller.rate_hz": (float, "controller execution rate"),
    "thrust.target_per_fan_n": (float, "preplanned per-fan thrust target"),
    "thrust.ramp_time_s": (float, "linear ramp duration from zero"),
    "perturbation.com_offset_x_m": (float, "CoM estimate error, body x"),
    "perturbation.com_offset_y_m": (float, "CoM estimate error, body y"),
    "perturbation.com_offset_z_m": (float, "CoM estimate error, body z"),
    "perturbation.foot_misalignment_left_deg": (float, "left foot thrust-axis pitch bias"),
    "perturbation.foot_misalignment_right_deg": (float, "right foot thrust-axis pitch bias"),
    "perturbation.thrust_scale_front": (float, "front fan output factor"),
    "perturbation.thrust_scale_back": (float, "back fan output factor"),
    "perturbation.thrust_scale_left": (float, "left fan output factor"),
    "perturbation.thrust_scale_right": (float, "right fan output factor"),
    "sim.duration_s": (float, "run length"),
    "sim.dt_s": (float, "physics step, at most 0.002"),
    "sim.sample_rate_hz": (float, "log sampling rate"),
    "sim.seed": (int, "random seed for the sensor noise hook"),
    "sim.integrator": (str, "euler or rk4"),
    "sim.sensor_noise_std": (float, "attitude/rate noise sigma, 0 disables"),
    "envelope.theta_pitch_min_deg": (float, "sweep start"),
    "envelope.theta_pitch_max_deg": (float, "sweep end"),
    "envelope.n_points": (int, "sweep point count"),
    "envelope.min_vertical_force_n": (float, "vertical thrust floor, default M g"),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse dotted-key lines into a typed mapping, rejecting unknown keys."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        typ = SCHEMA[key][0]
        try:
            values[key] = _parse_bool(value) if typ is bool else typ(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return values


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text, source=str(path))


def scenario_from_config(values: dict, **overrides) -> ScenarioConfig:
    """Build a ScenarioConfig from parsed values plus keyword overrides."""
    gains = None
    gain_keys = ["controller.kp_pitch", "controller.kd_pitch",
                 "controller.kp_yaw", "controller.kd_yaw"]
    present = [k for k in gain_keys if k in values]
    if present:
        if len(present) != len(gain_keys):
            missing = sorted(set(gain_keys) - set(present))
            raise ConfigError(f"explicit gains need all of {gain_keys}; missing {missing}")
        gains = ControllerGains(
            kp_pitch=values["controller.kp_pitch"],
            kd_pitch=values["controller.kd_pitch"],
            kp_yaw=values["controller.kp_yaw"],
            kd_yaw=values["controller.kd_yaw"],
            ki_pitch=values.get("controller.ki_pitch", 0.0),
            ki_yaw=values.get("controller.ki_yaw", 0.0),
        )

    kwargs = dict(
        posture=values.get("posture", "P1"),
        custom_posture=posture_from_config(values, values.get("posture", "P1")),
        mode=ControlMode.parse(values.get("mode", "both-on")),
        gains=gains,
        ramp=ThrustRamp(
            target_per_fan=values.get("thrust.target_per_fan_n", 48.0),
            ramp_time=values.get("thrust.ramp_time_s", 0.5),
        ),
        perturbation=_perturbation_from(values),
        duration=values.get("sim.duration_s", 2.5),
        dt=values.get("sim.dt_s", 1e-3),
        sample_rate=values.get("sim.sample_rate_hz", 250.0),
        controller_rate=values.get("controller.rate_hz", 250.0),
        seed=values.get("sim.seed", 0),
        integrator=values.get("sim.integrator", "euler"),
        sensor_noise_std=values.get("sim.sensor_noise_std", 0.0),
        setpoint=EulerAngles(
            0.0,
            math.radians(values.get("controller.setpoint_pitch_deg", 0.0)),
            math.radians(values.get("controller.setpoint_yaw_deg", 0.0)),
        ),
        limits=_limits_from(values),
        mass_total=values.get("geometry.mass_kg", 17.0),
        fan_spacing_waist=values.get("geometry.waist_fan_spacing_m", 0.30),
        fan_spacing_feet=values.get("geometry.foot_fan_spacing_m", 0.25),
        fan_mass=values.get("geometry.fan_mass_kg", 0.488),
        com_y=values.get("geometry.com_y_m", 0.0),
        zeta=values.get("controller.damping_ratio", 0.7),
        omega_n_pitch=values.get("controller.natural_freq_pitch_rad_s", 12.0),
        omega_n_yaw=values.get("controller.natural_freq_yaw_rad_s", 12.0),
    )
    kwargs.update(overrides)
    try:
        return ScenarioConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def posture_from_config(values: dict, label: str) -> Posture | None:
    """Selected builtin posture with any posture.* fields overridden.

    Returns None when no posture.* key is present, letting callers fall back
    to the plain builtin lookup.
    """
    keys = [k for k in values if k.startswith("posture.")]
    if not keys:
        return None
    try:
        base = builtin_posture(label)
        return Posture(
            name=label,
            com_sagittal=(values.get("posture.com_x_m", base.com_sagittal[0]),
                          values.get("posture.com_z_m", base.com_sagittal[1])),
            foot_fan=(values.get("posture.foot_x_m", base.foot_fan[0]),
                      values.get("posture.foot_z_m", base.foot_fan[1])),
            foot_pitch_range_deg=(
                values.get("posture.foot_pitch_min_deg", base.foot_pitch_range_deg[0]),
                values.get("posture.foot_pitch_max_deg", base.foot_pitch_range_deg[1])),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _perturbation_from(values: dict) -> Perturbation:
    default = Perturbation.standard()
    keys = [k for k in values if k.startswith("perturbation.")]
    if not keys:
        return default
    try:
        return Perturbation(
            com_offset=np.array([
                values.get("perturbation.com_offset_x_m", 0.0),
                values.get("perturbation.com_offset_y_m", 0.0),
                values.get("perturbation.com_offset_z_m", 0.0),
            ]),
            foot_axis_misalignment_left=math.radians(
                values.get("perturbation.foot_misalignment_left_deg", 0.0)),
            foot_axis_misalignment_right=math.radians(
                values.get("perturbation.foot_misalignment_right_deg", 0.0)),
            thrust_scale=np.array([
                values.get("perturbation.thrust_scale_front", 1.0),
                values.get("perturbation.thrust_scale_back", 1.0),
                values.get("perturbation.thrust_scale_left", 1.0),
                values.get("perturbation.thrust_scale_right", 1.0),
            ]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _limits_from(values: dict) -> FanLimits:
    try:
        return FanLimits(
            thrust_max_per_fan=values.get("limits.thrust_max_per_fan_n", 50.0),
            thrust_min=values.get("limits.thrust_min_n", 0.0),
            foot_pitch_rate_max=values.get("limits.foot_pitch_rate_max_rad_s", 8.0),
            thrust_time_constant=values.get("limits.thrust_time_constant_s", 0.1),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def envelope_settings_from_config(values: dict) -> dict:
    """Geometry overrides and sweep parameters for the envelope command."""
    return {
        "mass_total": values.get("geometry.mass_kg", 17.0),
        "fan_spacing_waist": values.get("geometry.waist_fan_spacing_m", 0.30),
        "fan_spacing_feet": values.get("geometry.foot_fan_spacing_m", 0.25),
        "fan_mass": values.get("geometry.fan_mass_kg", 0.488),
        "com_y": values.get("geometry.com_y_m", 0.0),
        "thrust_max_per_fan": values.get("limits.thrust_max_per_fan_n", 50.0),
        "theta_min": math.radians(values.get("envelope.theta_pitch_min_deg", -30.0)),
        "theta_max": math.radians(values.get("envelope.theta_pitch_max_deg", 30.0)),
        "n_points": values.get("envelope.n_points", 61),
        "min_vertical_force": values.get("envelope.min_vertical_force_n", None),
    }
