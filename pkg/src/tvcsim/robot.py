"""Physical parameters, takeoff postures, and derived geometry.

The robot is treated as a rigid body carrying four ducted fans: a front/back
pair fixed on the waist blowing along body +z, and a left/right pair on the
feet whose thrust axis pitches in the sagittal plane. Positions are expressed
in the body frame {B} with origin at the waist-fan midpoint.

All stored values are SI (meters, kilograms, radians); degrees are accepted
only at file/CLI boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GRAVITY = 9.81  # m/s^2

# Defaults for quantities without a direct measurement. The waist and foot
# fan spacings are estimated from the robot's overall proportions (830 mm
# height); both are overridable and every envelope report echoes the geometry
# it used, because the TVC/DT torque ratio depends on them.
DEFAULT_MASS = 17.0  # kg
DEFAULT_WAIST_FAN_SPACING = 0.30  # m, front-to-back distance L
DEFAULT_FOOT_FAN_SPACING = 0.25  # m, left-to-right distance L_f
DEFAULT_FAN_MASS = 0.488  # kg per ducted fan
DEFAULT_THRUST_MAX = 50.0  # N per fan

# Foot pitch slew limit: ankle actuator rated 245 rpm through a 28:50 belt
# gives ~14.4 rad/s at the foot; derated 3x for control headroom.
DEFAULT_FOOT_PITCH_RATE_MAX = 8.0  # rad/s
DEFAULT_THRUST_TIME_CONSTANT = 0.1  # s, spool-up lag (0 = ideal actuator)


class UnknownPostureError(ValueError):
    """Raised for a posture label that is not one of the builtins."""


@dataclass(frozen=True)
class Posture:
    """A fixed takeoff joint configuration, reduced to sagittal geometry.

    com_sagittal and foot_fan are (x, z) pairs in meters in {B};
    foot_pitch_range_deg is the admissible foot fan pitch interval.
    """

    name: str
    com_sagittal: tuple[float, float]
    foot_fan: tuple[float, float]
    foot_pitch_range_deg: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.foot_pitch_range_deg
        if not lo < hi:
            raise ValueError(f"foot pitch range must have min < max, got ({lo}, {hi})")
        if lo < -90.0 or hi > 90.0:
            raise ValueError(f"foot pitch range must lie within [-90, 90] deg, got ({lo}, {hi})")

    @property
    def foot_pitch_range(self) -> tuple[float, float]:
        """Range in radians."""
        lo, hi = self.foot_pitch_range_deg
        return (math.radians(lo), math.radians(hi))


_BUILTIN_POSTURES = {
    "P1": Posture("P1", com_sagittal=(0.025, -0.243), foot_fan=(0.020, -0.610),
                  foot_pitch_range_deg=(-74.0, 90.0)),
    "P2": Posture("P2", com_sagittal=(0.020, -0.265), foot_fan=(0.010, -0.650),
                  foot_pitch_range_deg=(-90.0, 90.0)),
    "P3": Posture("P3", com_sagittal=(0.050, -0.225), foot_fan=(0.070, -0.580),
                  foot_pitch_range_deg=(-82.0, 90.0)),
}


def builtin_posture(name: str) -> Posture:
    """Return one of the three builtin takeoff postures P1, P2, P3."""
    try:
        return _BUILTIN_POSTURES[name]
    except KeyError:
        raise UnknownPostureError(
            f"unknown posture {name!r}; expected one of {sorted(_BUILTIN_POSTURES)}"
        ) from None


def posture_names() -> list[str]:
    return sorted(_BUILTIN_POSTURES)


@dataclass(frozen=True)
class FanLimits:
    """Actuator bounds shared by the envelope search, controller, and sim."""

    thrust_max_per_fan: float = DEFAULT_THRUST_MAX
    thrust_min: float = 0.0
    foot_pitch_rate_max: float = DEFAULT_FOOT_PITCH_RATE_MAX
    thrust_time_constant: float = DEFAULT_THRUST_TIME_CONSTANT

    def __post_init__(self):
        if not 0.0 <= self.thrust_min < self.thrust_max_per_fan:
            raise ValueError(
                f"need 0 <= thrust_min < thrust_max_per_fan, got "
                f"({self.thrust_min}, {self.thrust_max_per_fan})"
            )
        if self.foot_pitch_rate_max <= 0.0:
            raise ValueError("foot_pitch_rate_max must be positive")
        if self.thrust_time_constant < 0.0:
            raise ValueError("thrust_time_constant must be >= 0")


@dataclass
class RobotGeometry:
    """Mass properties and fan placement in the body frame.

    Waist fans sit at (+-L/2, 0, 0) blowing along +z; foot fans sit at
    (p_fx, +-L_f/2, p_fz) with the left foot on +y (the y axis points left).
    """

    mass_total: float = DEFAULT_MASS
    com_body: np.ndarray = field(default_factory=lambda: np.zeros(3))
    fan_spacing_waist: float = DEFAULT_WAIST_FAN_SPACING  # L
    fan_foot_x: float = 0.0  # p_fx
    fan_foot_z: float = 0.0  # p_fz
    fan_spacing_feet: float = DEFAULT_FOOT_FAN_SPACING  # L_f
    inertia_body: np.ndarray | None = None  # 3x3 about the CoM, in {B}

    def __post_init__(self):
        self.com_body = np.asarray(self.com_body, dtype=float).reshape(3)
        if self.mass_total <= 0.0:
            raise ValueError("mass_total must be positive")
        if self.fan_spacing_waist <= 0.0 or self.fan_spacing_feet <= 0.0:
            raise ValueError("fan spacings must be positive")
        if self.inertia_body is None:
            self.inertia_body = point_mass_inertia(self)
        self.inertia_body = np.asarray(self.inertia_body, dtype=float).reshape(3, 3)
        if np.abs(self.inertia_body - self.inertia_body.T).max() > 1e-12:
            raise ValueError("inertia_body must be symmetric")
        if np.linalg.eigvalsh(self.inertia_body).min() <= 0.0:
            raise ValueError("inertia_body must be positive-definite")
        self.com_body.setflags(write=False)
        self.inertia_body.setflags(write=False)

    @property
    def fan_waist_front_x(self) -> float:
        return 0.5 * self.fan_spacing_waist

    @property
    def fan_waist_back_x(self) -> float:
        return -0.5 * self.fan_spacing_waist

    @property
    def weight(self) -> float:
        return self.mass_total * GRAVITY

    def fan_positions(self) -> np.ndarray:
        """Rows: front, back, left, right fan positions in {B}."""
        half_lf = 0.5 * self.fan_spacing_feet
        return np.array(
            [
                [self.fan_waist_front_x, 0.0, 0.0],
                [self.fan_waist_back_x, 0.0, 0.0],
                [self.fan_foot_x, half_lf, self.fan_foot_z],
                [self.fan_foot_x, -half_lf, self.fan_foot_z],
            ]
        )


def point_mass_inertia(geo: RobotGeometry, fan_mass: float = DEFAULT_FAN_MASS) -> np.ndarray:
    """Diagonal inertia surrogate about the CoM.

    Places one point mass per fan at its mounting position and the remaining
    mass at the CoM (zero contribution). Off-diagonal products are dropped so
    the tensor stays diagonal; this is a reproducible, order-of-magnitude
    stand-in when no measured tensor is available.
    """
    if fan_mass < 0.0 or 4.0 * fan_mass > geo.mass_total:
        raise ValueError("fan_mass must be >= 0 and four fans must not exceed total mass")
    diag = np.zeros(3)
    for pos in geo.fan_positions():
        r = pos - geo.com_body
        diag[0] += fan_mass * (r[1] ** 2 + r[2] ** 2)
        diag[1] += fan_mass * (r[0] ** 2 + r[2] ** 2)
        diag[2] += fan_mass * (r[0] ** 2 + r[1] ** 2)
    return np.diag(diag)


def geometry_from_posture(
    posture: Posture,
    *,
    mass_total: float = DEFAULT_MASS,
    fan_spacing_waist: float = DEFAULT_WAIST_FAN_SPACING,
    fan_spacing_feet: float = DEFAULT_FOOT_FAN_SPACING,
    fan_mass: float = DEFAULT_FAN_MASS,
    com_y: float = 0.0,
    inertia_body: np.ndarray | None = None,
) -> RobotGeometry:
    """Build the rigid-body geometry for a takeoff posture.

    com_y defaults to zero under the sagittal-symmetry assumption but can be
    overridden. If inertia_body is not given the point-mass surrogate is
    computed at load time.
    """
    x_c, z_c = posture.com_sagittal
    p_fx, p_fz = posture.foot_fan
    geo = RobotGeometry(
        mass_total=mass_total,
        com_body=np.array([x_c, com_y, z_c]),
        fan_spacing_waist=fan_spacing_waist,
        fan_foot_x=p_fx,
        fan_foot_z=p_fz,
        fan_spacing_feet=fan_spacing_feet,
        inertia_body=inertia_body,
    )
    if inertia_body is None:
        geo.inertia_body = point_mass_inertia(geo, fan_mass=fan_mass)
        geo.inertia_body.setflags(write=False)
    return geo


def validate_foot_command(posture: Posture, theta: float) -> bool:
    """True iff the foot pitch command (radians) lies in the posture's range."""
    lo, hi = posture.foot_pitch_range
    return lo <= theta <= hi
