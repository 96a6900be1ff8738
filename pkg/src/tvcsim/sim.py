"""Fixed-step 6-DOF takeoff simulation with ground phase and perturbations.

The run starts on the ground with the feet locked at the hover-trim angle:
until the net vertical force turns positive the body is held fixed (ground
interference prevents the feet from reorienting). After liftoff the rigid
body integrates under the four-fan wrench with semi-implicit Euler (velocity
first, trapezoidal position update, exponential-map attitude) or optional
RK4. The controller runs at its own fixed rate on integer physics substeps;
thrusts follow the preplanned ramp through a first-order spool lag and foot
angles slew toward the commands at the ankle rate limit.

Perturbations model the disturbances the controller exists to reject: a CoM
estimate error (the trim is computed from nominal geometry, the dynamics use
the shifted CoM) and a fixed per-foot thrust-axis pitch bias standing in for
joint position error, whose left/right asymmetry makes the yaw force couple
that spins the uncontrolled robot.

Identical configurations produce bit-identical logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .controller import (
    AttitudeController,
    ControlMode,
    ControllerGains,
    FootCommand,
    ThrustRamp,
    thrust_schedule,
    tune_gains,
)
from .robot import FanLimits, Posture, RobotGeometry, builtin_posture, geometry_from_posture
from .spatial import (
    EulerAngles,
    Quat,
    Vec3,
    quat_identity,
    quat_integrate,
    quat_multiply,
    quat_normalize,
    quat_to_euler,
    quat_to_matrix,
)
from .trim import hover_trim
from .wrench import FanState, Wrench, generalized_wrench_3d

PHASE_GROUND = "GROUND"
PHASE_AIRBORNE = "AIRBORNE"

# event markers for the takeoff-instability bands
PITCH_EVENT_DEG = 30.0
YAW_EVENT_DEG = 40.0

POSITION_GUARD_M = 100.0
RATE_GUARD_RAD_S = 100.0
MAX_PHYSICS_DT = 0.002

LOG_HEADER = [
    "time_s", "px", "py", "pz", "vx", "vy", "vz",
    "roll_deg", "pitch_deg", "yaw_deg", "wx", "wy", "wz",
    "theta_L_cmd_deg", "theta_R_cmd_deg", "theta_L_deg", "theta_R_deg",
    "fF", "fB", "fL", "fR", "phase",
]


class DivergenceError(Exception):
    """Simulation left the sane envelope; partial log attached when known."""

    def __init__(self, message: str, log: "SimLog | None" = None):
        super().__init__(message)
        self.log = log


@dataclass
class RigidBodyState:
    position_world: Vec3 = field(default_factory=lambda: np.zeros(3))
    velocity_world: Vec3 = field(default_factory=lambda: np.zeros(3))
    orientation: Quat = field(default_factory=quat_identity)
    angular_velocity_body: Vec3 = field(default_factory=lambda: np.zeros(3))
    time: float = 0.0

    def copy(self) -> "RigidBodyState":
        return RigidBodyState(
            self.position_world.copy(),
            self.velocity_world.copy(),
            self.orientation.copy(),
            self.angular_velocity_body.copy(),
            self.time,
        )


@dataclass
class Perturbation:
    """Disturbance sources applied to the true dynamics, unknown to the trim."""

    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    foot_axis_misalignment_left: float = 0.0
    foot_axis_misalignment_right: float = 0.0
    thrust_scale: np.ndarray = field(default_factory=lambda: np.ones(4))

    def __post_init__(self):
        self.com_offset = np.asarray(self.com_offset, dtype=float).reshape(3)
        self.thrust_scale = np.asarray(self.thrust_scale, dtype=float).reshape(4)
        cap = math.radians(10.0)
        for name in ("foot_axis_misalignment_left", "foot_axis_misalignment_right"):
            if abs(getattr(self, name)) > cap:
                raise ValueError(f"|{name}| must be <= 10 deg")
        if (self.thrust_scale < 0.8).any() or (self.thrust_scale > 1.2).any():
            raise ValueError("thrust_scale factors must lie in [0.8, 1.2]")

    @classmethod
    def standard(cls) -> "Perturbation":
        """10 mm forward CoM error plus a +-2 deg foot-axis bias couple."""
        return cls(
            com_offset=np.array([0.010, 0.0, 0.0]),
            foot_axis_misalignment_left=math.radians(2.0),
            foot_axis_misalignment_right=math.radians(-2.0),
        )


@dataclass
class ScenarioConfig:
    posture: str = "P1"
    custom_posture: Posture | None = None  # overrides the builtin lookup
    mode: ControlMode = ControlMode.BOTH_ON
    gains: ControllerGains | None = None  # None -> tuned at scenario start
    ramp: ThrustRamp = field(default_factory=ThrustRamp)
    perturbation: Perturbation = field(default_factory=Perturbation.standard)
    duration: float = 2.5
    dt: float = 1e-3
    sample_rate: float = 250.0
    controller_rate: float = 250.0
    seed: int = 0
    integrator: str = "euler"
    sensor_noise_std: float = 0.0  # rad / rad-per-s, 0 disables the hook
    setpoint: EulerAngles = field(default_factory=lambda: EulerAngles(0.0, 0.0, 0.0))
    limits: FanLimits = field(default_factory=FanLimits)
    mass_total: float = 17.0
    fan_spacing_waist: float = 0.30
    fan_spacing_feet: float = 0.25
    fan_mass: float = 0.488
    com_y: float = 0.0
    zeta: float = 0.7
    omega_n_pitch: float = 12.0
    omega_n_yaw: float = 12.0

    def __post_init__(self):
        if self.dt <= 0.0 or self.dt > MAX_PHYSICS_DT:
            raise ValueError(f"physics dt must be in (0, {MAX_PHYSICS_DT}] s")
        if self.duration < self.dt:
            raise ValueError("duration must be >= dt")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError("integrator must be 'euler' or 'rk4'")
        self._controller_substeps = _substeps(1.0 / self.controller_rate, self.dt,
                                              "controller period")
        self._sample_substeps = _substeps(1.0 / self.sample_rate, self.dt,
                                          "sample period")
        if self.ramp.target_per_fan > self.limits.thrust_max_per_fan:
            raise ValueError(
                f"thrust ramp target {self.ramp.target_per_fan} N exceeds the "
                f"{self.limits.thrust_max_per_fan} N per-fan limit"
            )

    def resolve_posture(self) -> Posture:
        return self.custom_posture or builtin_posture(self.posture)

    def geometry(self) -> RobotGeometry:
        return geometry_from_posture(
            self.resolve_posture(),
            mass_total=self.mass_total,
            fan_spacing_waist=self.fan_spacing_waist,
            fan_spacing_feet=self.fan_spacing_feet,
            fan_mass=self.fan_mass,
            com_y=self.com_y,
        )

    def echo(self) -> dict:
        """Resolved configuration for log headers and manifests."""
        return {
            "posture": self.posture,
            "mode": self.mode.value,
            "gains": None if self.gains is None else vars(self.gains) | {},
            "ramp_target_per_fan_n": self.ramp.target_per_fan,
            "ramp_time_s": self.ramp.ramp_time,
            "perturbation": {
                "com_offset_m": [float(v) for v in self.perturbation.com_offset],
                "foot_misalignment_left_deg": math.degrees(
                    self.perturbation.foot_axis_misalignment_left),
                "foot_misalignment_right_deg": math.degrees(
                    self.perturbation.foot_axis_misalignment_right),
                "thrust_scale": [float(v) for v in self.perturbation.thrust_scale],
            },
            "duration_s": self.duration,
            "dt_s": self.dt,
            "sample_rate_hz": self.sample_rate,
            "controller_rate_hz": self.controller_rate,
            "seed": self.seed,
            "integrator": self.integrator,
            "sensor_noise_std": self.sensor_noise_std,
            "setpoint_deg": [math.degrees(self.setpoint.roll),
                             math.degrees(self.setpoint.pitch),
                             math.degrees(self.setpoint.yaw)],
            "mass_total_kg": self.mass_total,
            "fan_spacing_waist_m": self.fan_spacing_waist,
            "fan_spacing_feet_m": self.fan_spacing_feet,
            "thrust_time_constant_s": self.limits.thrust_time_constant,
        }


def _substeps(period: float, dt: float, what: str) -> int:
    n = period / dt
    if abs(n - round(n)) > 1e-9 or round(n) < 1:
        raise ValueError(f"{what} {period} s must be an integer multiple of dt {dt} s")
    return int(round(n))


class SimLog:
    """Time-indexed record of one run plus its event summary."""

    def __init__(self, header: list[str] | None = None):
        self.header = list(header or LOG_HEADER)
        self.rows: list[tuple] = []
        self.events: dict = {}

    def append(self, row: tuple) -> None:
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        i = self.header.index(name)
        return np.array([row[i] for row in self.rows])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.header) + "\n")
            for row in self.rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")

    def events_json(self) -> str:
        return json.dumps(self.events, indent=2, sort_keys=True)

    def write_events_json(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.events_json() + "\n")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{v:.10g}"


def detect_liftoff(wrench: Wrench) -> bool:
    """Ground contact ends once the net world vertical force is positive."""
    return wrench.force_world[2] > 0.0


def dynamics_step(
    state: RigidBodyState,
    fan_state: FanState,
    geo: RobotGeometry,
    dt: float,
    perturbation: Perturbation | None = None,
    integrator: str = "euler",
) -> RigidBodyState:
    """Advance the free-flying rigid body by one step.

    The default scheme updates velocities first and positions with the
    velocity midpoint, which integrates constant accelerations exactly;
    attitude uses the exponential map with the updated body rate. 'rk4'
    selects a classic fourth-order step for high-accuracy checks.
    """
    if dt <= 0.0 or dt > MAX_PHYSICS_DT:
        raise ValueError(f"dt must be in (0, {MAX_PHYSICS_DT}] s")
    if integrator == "euler":
        new = _step_semi_implicit(state, fan_state, geo, dt, perturbation)
    elif integrator == "rk4":
        new = _step_rk4(state, fan_state, geo, dt, perturbation)
    else:
        raise ValueError("integrator must be 'euler' or 'rk4'")

    if np.linalg.norm(new.position_world) > POSITION_GUARD_M:
        raise DivergenceError(
            f"position {new.position_world} left the {POSITION_GUARD_M} m guard at t={new.time:.3f} s"
        )
    if np.linalg.norm(new.angular_velocity_body) > RATE_GUARD_RAD_S:
        raise DivergenceError(
            f"body rate {new.angular_velocity_body} exceeded {RATE_GUARD_RAD_S} rad/s at t={new.time:.3f} s"
        )
    return new


def _accels(state, fan_state, geo, perturbation):
    w = generalized_wrench_3d(fan_state, geo, state.orientation, perturbation)
    acc = w.force_world / geo.mass_total
    rot = quat_to_matrix(state.orientation)
    torque_body = rot.T @ w.torque_world
    inertia = geo.inertia_body
    omega = state.angular_velocity_body
    omega_dot = np.linalg.solve(inertia, torque_body - np.cross(omega, inertia @ omega))
    return acc, omega_dot


def _step_semi_implicit(state, fan_state, geo, dt, perturbation):
    acc, omega_dot = _accels(state, fan_state, geo, perturbation)
    v_new = state.velocity_world + acc * dt
    p_new = state.position_world + 0.5 * (state.velocity_world + v_new) * dt
    omega_new = state.angular_velocity_body + omega_dot * dt
    q_new = quat_integrate(state.orientation, omega_new, dt)
    return RigidBodyState(p_new, v_new, q_new, omega_new, state.time + dt)


def _quat_derivative(q, omega):
    return 0.5 * quat_multiply(q, np.array([0.0, omega[0], omega[1], omega[2]]))


def _step_rk4(state, fan_state, geo, dt, perturbation):
    def deriv(p, v, q, omega):
        s = RigidBodyState(p, v, q, omega, state.time)
        acc, omega_dot = _accels(s, fan_state, geo, perturbation)
        return v, acc, _quat_derivative(q, omega), omega_dot

    p0, v0 = state.position_world, state.velocity_world
    q0, w0 = state.orientation, state.angular_velocity_body
    k1 = deriv(p0, v0, q0, w0)
    k2 = deriv(p0 + 0.5 * dt * k1[0], v0 + 0.5 * dt * k1[1],
               quat_normalize(q0 + 0.5 * dt * k1[2]), w0 + 0.5 * dt * k1[3])
    k3 = deriv(p0 + 0.5 * dt * k2[0], v0 + 0.5 * dt * k2[1],
               quat_normalize(q0 + 0.5 * dt * k2[2]), w0 + 0.5 * dt * k2[3])
    k4 = deriv(p0 + dt * k3[0], v0 + dt * k3[1],
               quat_normalize(q0 + dt * k3[2]), w0 + dt * k3[3])

    def blend(i):
        return (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0

    return RigidBodyState(
        p0 + dt * blend(0),
        v0 + dt * blend(1),
        quat_normalize(q0 + dt * blend(2)),
        w0 + dt * blend(3),
        state.time + dt,
    )


def run_scenario(cfg: ScenarioConfig) -> SimLog:
    """Deterministic closed-loop takeoff run.

    The trim and controller gains come from the nominal geometry; the
    dynamics see the perturbed one. Raises DivergenceError (with the partial
    log attached) if the guard trips.
    """
    geo = cfg.geometry()
    posture = cfg.resolve_posture()
    trim_state, _trim_pitch = hover_trim(geo, equal_thrust=True, limits=cfg.limits)
    trim_angle = trim_state.theta_left
    gains = cfg.gains or tune_gains(
        geo,
        hover_thrust_per_fan=trim_state.f_left,
        trim_foot_angle=trim_angle,
        zeta=cfg.zeta,
        omega_n_pitch=cfg.omega_n_pitch,
        omega_n_yaw=cfg.omega_n_yaw,
    )
    controller = AttitudeController(
        gains, cfg.mode, posture, cfg.limits, trim_angle, setpoint=cfg.setpoint
    )
    rng = np.random.default_rng(cfg.seed)

    log = SimLog()
    log.events = {
        "config": cfg.echo() | {"gains_used": vars(gains) | {},
                                "trim_foot_angle_deg": math.degrees(trim_angle)},
        "liftoff_time_s": None,
        "never_lifted": True,
        "altitude_at_2s_m": None,
        "max_abs_pitch_deg": 0.0,
        "max_abs_yaw_deg": 0.0,
        "max_abs_roll_deg": 0.0,
        f"pitch_exceeds_{PITCH_EVENT_DEG:.0f}deg_time_s": None,
        f"yaw_exceeds_{YAW_EVENT_DEG:.0f}deg_time_s": None,
        "diverged": False,
        "divergence_reason": None,
        "final_time_s": 0.0,
    }

    state = RigidBodyState()
    phase = PHASE_GROUND
    foot_left = trim_angle
    foot_right = trim_angle
    # an ideal actuator already sits on the schedule at t = 0
    if cfg.limits.thrust_time_constant == 0.0:
        thrusts = thrust_schedule(0.0, cfg.ramp) * cfg.perturbation.thrust_scale
    else:
        thrusts = np.zeros(4)
    command = FootCommand(trim_angle, trim_angle, 0.0)
    n_steps = int(round(cfg.duration / cfg.dt))
    i_2s = int(round(2.0 / cfg.dt)) if cfg.duration >= 2.0 else None
    pitch_key = f"pitch_exceeds_{PITCH_EVENT_DEG:.0f}deg_time_s"
    yaw_key = f"yaw_exceeds_{YAW_EVENT_DEG:.0f}deg_time_s"

    try:
        for i in range(n_steps + 1):
            t = i * cfg.dt
            euler = quat_to_euler(state.orientation)

            if i % cfg._controller_substeps == 0:
                meas_euler, meas_rates = _measure(state, euler, cfg, rng)
                command = controller.step(
                    meas_euler, meas_rates, thrust_schedule(t, cfg.ramp),
                    cfg._controller_substeps * cfg.dt,
                )

            fan_state = FanState(
                f_front=thrusts[0], f_back=thrusts[1],
                f_left=thrusts[2], f_right=thrusts[3],
                theta_left=foot_left, theta_right=foot_right,
            )
            wrench = generalized_wrench_3d(fan_state, geo, state.orientation,
                                           cfg.perturbation)

            if phase == PHASE_GROUND and detect_liftoff(wrench):
                phase = PHASE_AIRBORNE
                log.events["liftoff_time_s"] = t
                log.events["never_lifted"] = False

            _update_events(log.events, t, euler, pitch_key, yaw_key)
            if i_2s is not None and i == i_2s:
                log.events["altitude_at_2s_m"] = float(state.position_world[2])
            log.events["final_time_s"] = t

            if i % cfg._sample_substeps == 0:
                log.append(_log_row(t, state, euler, command, fan_state, phase))

            if i == n_steps:
                break

            # advance actuators toward the commands over (t, t + dt]
            if phase == PHASE_AIRBORNE:
                max_step = cfg.limits.foot_pitch_rate_max * cfg.dt
                foot_left = _toward(foot_left, command.theta_left_cmd, max_step)
                foot_right = _toward(foot_right, command.theta_right_cmd, max_step)
            sched = thrust_schedule(t + cfg.dt, cfg.ramp)
            targets = sched * cfg.perturbation.thrust_scale
            if cfg.limits.thrust_time_constant > 0.0:
                alpha = 1.0 - math.exp(-cfg.dt / cfg.limits.thrust_time_constant)
                thrusts = thrusts + alpha * (targets - thrusts)
            else:
                thrusts = targets.copy()

            if phase == PHASE_AIRBORNE:
                state = dynamics_step(state, fan_state, geo, cfg.dt,
                                      cfg.perturbation, cfg.integrator)
            else:
                state = state.copy()
                state.time = t + cfg.dt
    except DivergenceError as err:
        log.events["diverged"] = True
        log.events["divergence_reason"] = str(err)
        err.log = log
        raise

    return log


def _measure(state, euler, cfg, rng):
    rates = state.angular_velocity_body
    if cfg.sensor_noise_std > 0.0:
        noise = rng.normal(0.0, cfg.sensor_noise_std, 6)
        euler = EulerAngles(euler.roll + noise[0], euler.pitch + noise[1],
                            euler.yaw + noise[2], euler.gimbal_lock)
        rates = rates + noise[3:]
    return euler, rates


def _toward(value: float, target: float, max_step: float) -> float:
    return min(value + max_step, max(value - max_step, target))


def _update_events(events, t, euler, pitch_key, yaw_key):
    pitch_deg = abs(math.degrees(euler.pitch))
    yaw_deg = abs(math.degrees(euler.yaw))
    roll_deg = abs(math.degrees(euler.roll))
    events["max_abs_pitch_deg"] = max(events["max_abs_pitch_deg"], pitch_deg)
    events["max_abs_yaw_deg"] = max(events["max_abs_yaw_deg"], yaw_deg)
    events["max_abs_roll_deg"] = max(events["max_abs_roll_deg"], roll_deg)
    if events[pitch_key] is None and pitch_deg >= PITCH_EVENT_DEG:
        events[pitch_key] = t
    if events[yaw_key] is None and yaw_deg >= YAW_EVENT_DEG:
        events[yaw_key] = t


def _log_row(t, state, euler, command: FootCommand, fan_state: FanState, phase):
    return (
        t,
        state.position_world[0], state.position_world[1], state.position_world[2],
        state.velocity_world[0], state.velocity_world[1], state.velocity_world[2],
        math.degrees(euler.roll), math.degrees(euler.pitch), math.degrees(euler.yaw),
        state.angular_velocity_body[0], state.angular_velocity_body[1],
        state.angular_velocity_body[2],
        math.degrees(command.theta_left_cmd), math.degrees(command.theta_right_cmd),
        math.degrees(fan_state.theta_left), math.degrees(fan_state.theta_right),
        fan_state.f_front, fan_state.f_back, fan_state.f_left, fan_state.f_right,
        phase,
    )
