"""PD loop arithmetic, command limiting, feedback signs, and gain tuning."""

import math

import numpy as np
import pytest

from tvcsim.controller import (
    AttitudeController,
    ControlMode,
    ControllerGains,
    ThrustRamp,
    pd_step,
    thrust_schedule,
    tune_gains,
)
from tvcsim.robot import FanLimits, builtin_posture, geometry_from_posture
from tvcsim.spatial import EulerAngles
from tvcsim.trim import hover_trim
from tvcsim.wrench import FanState, total_wrench

GEO = geometry_from_posture(builtin_posture("P1"))
POSTURE = builtin_posture("P1")
LIMITS = FanLimits()


def make_controller(mode=ControlMode.BOTH_ON, trim=0.1, gains=None,
                    rate_max=None):
    gains = gains or ControllerGains(1.0, 0.1, 0.5, 0.06)
    limits = LIMITS if rate_max is None else FanLimits(foot_pitch_rate_max=rate_max)
    return AttitudeController(gains, mode, POSTURE, limits, trim)


def test_pd_step_arithmetic():
    assert pd_step(2.0, 0.5, 0.1, -0.2) == pytest.approx(0.1)
    assert pd_step(2.0, 0.5, 0.0, 0.0) == 0.0


def test_pd_step_homogeneous():
    base = pd_step(1.5, 0.3, 0.07, -0.01)
    assert pd_step(3.0, 0.6, 0.07, -0.01) == pytest.approx(2.0 * base)


def test_thrust_schedule_ramp():
    ramp = ThrustRamp(target_per_fan=48.0, ramp_time=1.0)
    assert thrust_schedule(0.0, ramp) == 0.0
    assert thrust_schedule(0.5, ramp) == pytest.approx(24.0)
    assert thrust_schedule(1.0, ramp) == 48.0
    assert thrust_schedule(7.0, ramp) == 48.0


def test_thrust_schedule_monotone():
    ramp = ThrustRamp(target_per_fan=48.0, ramp_time=0.5)
    times = np.linspace(0.0, 1.0, 100)
    values = [thrust_schedule(float(t), ramp) for t in times]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_thrust_schedule_step():
    ramp = ThrustRamp(target_per_fan=50.0, ramp_time=0.0)
    assert thrust_schedule(0.0, ramp) == 50.0


def test_thrust_schedule_rejects_negative_time():
    with pytest.raises(ValueError):
        thrust_schedule(-0.1, ThrustRamp())


def test_gains_validation():
    with pytest.raises(ValueError):
        ControllerGains(-1.0, 0.1, 0.5, 0.06)


def test_zero_error_passes_trim_through():
    ctl = make_controller(trim=0.1)
    cmd = ctl.step(EulerAngles(0.0, 0.0, 0.0), np.zeros(3), 40.0, 0.004)
    assert cmd.theta_left_cmd == pytest.approx(0.1, abs=1e-15)
    assert cmd.theta_right_cmd == pytest.approx(0.1, abs=1e-15)
    assert cmd.thrust_schedule_value == 40.0


def test_all_off_holds_trim():
    ctl = make_controller(mode=ControlMode.ALL_OFF, trim=0.08)
    for pitch in (-0.5, 0.0, 0.4):
        cmd = ctl.step(EulerAngles(0.0, pitch, 0.3), np.array([0.1, -0.2, 0.5]),
                       30.0, 0.004)
        assert cmd.theta_left_cmd == 0.08
        assert cmd.theta_right_cmd == 0.08


def test_pitch_only_keeps_feet_identical():
    ctl = make_controller(mode=ControlMode.PITCH_ONLY)
    cmd = ctl.step(EulerAngles(0.0, 0.2, 0.9), np.array([0.0, 0.1, 0.7]), 30.0, 0.004)
    assert cmd.theta_left_cmd == cmd.theta_right_cmd


def test_commands_clamped_to_posture_range():
    gains = ControllerGains(50.0, 0.0, 50.0, 0.0)
    ctl = make_controller(gains=gains, rate_max=1e6)
    lo, hi = POSTURE.foot_pitch_range
    for pitch in (-1.5, 1.5):
        ctl.reset()
        cmd = ctl.step(EulerAngles(0.0, pitch, 0.0), np.zeros(3), 30.0, 1.0)
        assert lo <= cmd.theta_left_cmd <= hi
        assert lo <= cmd.theta_right_cmd <= hi


def test_slew_rate_limit():
    ctl = make_controller(rate_max=8.0, trim=0.0,
                          gains=ControllerGains(100.0, 0.0, 0.0, 0.0))
    dt = 0.004
    prev_left = 0.0
    for _ in range(20):
        cmd = ctl.step(EulerAngles(0.0, 1.0, 0.0), np.zeros(3), 30.0, dt)
        assert abs(cmd.theta_left_cmd - prev_left) <= 8.0 * dt + 1e-12
        prev_left = cmd.theta_left_cmd


def test_pitch_feedback_is_restoring():
    # compose controller and wrench: pitch torque must fall as pitch rises
    fs_trim, trim_pitch = hover_trim(GEO)
    gains = tune_gains(GEO, fs_trim.f_left, fs_trim.theta_left)
    f = fs_trim.f_left

    def torque_at(pitch_dev):
        ctl = AttitudeController(gains, ControlMode.BOTH_ON, POSTURE, LIMITS,
                                 fs_trim.theta_left)
        cmd = ctl.step(EulerAngles(0.0, pitch_dev, 0.0), np.zeros(3), f, 0.004)
        fs = FanState(f, f, f, f, cmd.theta_left_cmd, cmd.theta_right_cmd)
        return total_wrench(fs, GEO, trim_pitch + pitch_dev).torque_world[1]

    delta = 1e-3
    slope = (torque_at(delta) - torque_at(-delta)) / (2.0 * delta)
    assert slope < 0.0


def test_yaw_feedback_is_restoring():
    fs_trim, _ = hover_trim(GEO)
    gains = tune_gains(GEO, fs_trim.f_left, fs_trim.theta_left)
    f = fs_trim.f_left

    def yaw_torque(yaw):
        ctl = AttitudeController(gains, ControlMode.BOTH_ON, POSTURE, LIMITS,
                                 fs_trim.theta_left)
        cmd = ctl.step(EulerAngles(0.0, 0.0, yaw), np.zeros(3), f, 0.004)
        fs = FanState(f, f, f, f, cmd.theta_left_cmd, cmd.theta_right_cmd)
        return total_wrench(fs, GEO, 0.0).torque_world[2]

    # negative yaw needs positive yaw torque and vice versa
    assert yaw_torque(-0.1) > 0.0
    assert yaw_torque(+0.1) < 0.0


def test_yaw_error_counter_rotates_feet():
    # the two feet move in opposite directions about the mean command
    ctl = make_controller(trim=0.1)
    cmd = ctl.step(EulerAngles(0.0, 0.0, -0.2), np.zeros(3), 40.0, 0.004)
    mean = 0.5 * (cmd.theta_left_cmd + cmd.theta_right_cmd)
    assert cmd.theta_right_cmd > mean > cmd.theta_left_cmd


def test_rate_damping_sign():
    # a pure pitch-down rate commands more forward foot tilt than rest
    ctl = make_controller(trim=0.1)
    still = ctl.step(EulerAngles(0.0, 0.0, 0.0), np.zeros(3), 40.0, 0.004)
    ctl.reset()
    diving = ctl.step(EulerAngles(0.0, 0.0, 0.0), np.array([0.0, 0.5, 0.0]),
                      40.0, 0.004)
    assert diving.theta_left_cmd > still.theta_left_cmd


def test_tune_gains_pole_placement():
    fs_trim, _ = hover_trim(GEO)
    gains = tune_gains(GEO, fs_trim.f_left, fs_trim.theta_left,
                       zeta=0.7, omega_n_pitch=12.0, omega_n_yaw=12.0)
    assert gains.kp_pitch > 0 and gains.kd_pitch > 0
    assert gains.kp_yaw > 0 and gains.kd_yaw > 0
    # recover wn^2 = b kp / I within the 4-digit rounding
    f, theta = fs_trim.f_left, fs_trim.theta_left
    b_pitch = 2.0 * f * (math.cos(theta) * (GEO.com_body[2] - GEO.fan_foot_z)
                         + math.sin(theta) * (GEO.com_body[0] - GEO.fan_foot_x))
    wn = math.sqrt(b_pitch * gains.kp_pitch / GEO.inertia_body[1, 1])
    assert wn == pytest.approx(12.0, rel=1e-3)


def test_tune_gains_rejects_degenerate_geometry():
    # fans level with the CoM leave no pitch authority
    from tvcsim.robot import Posture

    flat = geometry_from_posture(
        Posture("FLAT", (0.0, -0.3), (0.0, -0.3), (-74.0, 90.0)))
    with pytest.raises(ValueError):
        tune_gains(flat, 40.0, 0.0)


def test_integral_term_defaults_off_but_works():
    fast = FanLimits(foot_pitch_rate_max=1e6)
    with_i = AttitudeController(ControllerGains(1.0, 0.0, 0.5, 0.06, ki_pitch=0.5),
                                ControlMode.BOTH_ON, POSTURE, fast, 0.0)
    without_i = AttitudeController(ControllerGains(1.0, 0.0, 0.5, 0.06),
                                   ControlMode.BOTH_ON, POSTURE, fast, 0.0)
    attitude = EulerAngles(0.0, 0.1, 0.0)
    for _ in range(10):
        cmd_i = with_i.step(attitude, np.zeros(3), 40.0, 0.004)
        cmd_p = without_i.step(attitude, np.zeros(3), 40.0, 0.004)
    # the integrator keeps pushing while the pure PD command stands still
    assert cmd_p.theta_left_cmd == pytest.approx(0.1, abs=1e-12)
    assert cmd_i.theta_left_cmd > cmd_p.theta_left_cmd


def test_mode_parse():
    assert ControlMode.parse("both-on") is ControlMode.BOTH_ON
    assert ControlMode.parse("pitch-only") is ControlMode.PITCH_ONLY
    assert ControlMode.parse("all-off") is ControlMode.ALL_OFF
    with pytest.raises(ValueError):
        ControlMode.parse("sometimes")
