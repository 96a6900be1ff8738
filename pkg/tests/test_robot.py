"""Posture tables, geometry construction, and actuator limit contracts."""

import math

import numpy as np
import pytest

from tvcsim.robot import (
    GRAVITY,
    FanLimits,
    Posture,
    RobotGeometry,
    UnknownPostureError,
    builtin_posture,
    geometry_from_posture,
    point_mass_inertia,
    posture_names,
    validate_foot_command,
)


def test_builtin_posture_values():
    p1 = builtin_posture("P1")
    assert p1.com_sagittal == (0.025, -0.243)
    assert p1.foot_fan == (0.020, -0.610)
    assert p1.foot_pitch_range_deg == (-74.0, 90.0)

    p2 = builtin_posture("P2")
    assert p2.com_sagittal == (0.020, -0.265)
    assert p2.foot_fan == (0.010, -0.650)
    assert p2.foot_pitch_range_deg == (-90.0, 90.0)

    p3 = builtin_posture("P3")
    assert p3.com_sagittal == (0.050, -0.225)
    assert p3.foot_fan == (0.070, -0.580)
    assert p3.foot_pitch_range_deg == (-82.0, 90.0)


def test_unknown_posture_label():
    with pytest.raises(UnknownPostureError):
        builtin_posture("P9")
    assert posture_names() == ["P1", "P2", "P3"]


def test_geometry_foot_fan_positions():
    geo = geometry_from_posture(builtin_posture("P1"), fan_spacing_feet=0.25)
    positions = geo.fan_positions()
    np.testing.assert_allclose(positions[2], [0.020, 0.125, -0.610])  # left
    np.testing.assert_allclose(positions[3], [0.020, -0.125, -0.610])  # right
    np.testing.assert_allclose(positions[0], [0.15, 0.0, 0.0])  # front
    np.testing.assert_allclose(positions[1], [-0.15, 0.0, 0.0])  # back


def test_geometry_lever_arm():
    geo = geometry_from_posture(builtin_posture("P1"))
    assert geo.com_body[2] - geo.fan_foot_z == pytest.approx(0.367, abs=1e-12)


def test_geometry_sagittal_symmetry_default():
    for name in posture_names():
        geo = geometry_from_posture(builtin_posture(name))
        assert geo.com_body[1] == 0.0
    geo = geometry_from_posture(builtin_posture("P1"), com_y=0.003)
    assert geo.com_body[1] == 0.003


def test_validate_foot_command():
    assert not validate_foot_command(builtin_posture("P1"), math.radians(-80.0))
    assert validate_foot_command(builtin_posture("P2"), math.radians(-90.0))
    assert validate_foot_command(builtin_posture("P3"), 0.0)


def test_default_thrust_budget():
    limits = FanLimits()
    assert 4.0 * limits.thrust_max_per_fan == 200.0
    # thrust-to-weight must clear the low-margin regime the design targets
    assert 200.0 / (17.0 * GRAVITY) > 1.1


def test_fan_limits_validation():
    with pytest.raises(ValueError):
        FanLimits(thrust_min=-1.0)
    with pytest.raises(ValueError):
        FanLimits(thrust_min=60.0, thrust_max_per_fan=50.0)
    with pytest.raises(ValueError):
        FanLimits(foot_pitch_rate_max=0.0)
    with pytest.raises(ValueError):
        FanLimits(thrust_time_constant=-0.1)


def test_posture_validation():
    with pytest.raises(ValueError):
        Posture("bad", (0, -0.2), (0, -0.6), (30.0, 10.0))
    with pytest.raises(ValueError):
        Posture("bad", (0, -0.2), (0, -0.6), (-100.0, 90.0))


def test_geometry_validation():
    with pytest.raises(ValueError):
        RobotGeometry(mass_total=0.0)
    with pytest.raises(ValueError):
        RobotGeometry(fan_spacing_waist=-0.1)
    with pytest.raises(ValueError):
        RobotGeometry(inertia_body=np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        RobotGeometry(inertia_body=np.arange(9.0).reshape(3, 3))


def test_point_mass_inertia_is_diagonal_spd():
    geo = geometry_from_posture(builtin_posture("P2"))
    inertia = geo.inertia_body
    assert np.all(inertia == np.diag(np.diag(inertia)))
    assert np.linalg.eigvalsh(inertia).min() > 0.0


def test_point_mass_inertia_scales_with_fan_mass():
    geo = geometry_from_posture(builtin_posture("P1"))
    doubled = point_mass_inertia(geo, fan_mass=2.0 * 0.488)
    np.testing.assert_allclose(doubled, 2.0 * point_mass_inertia(geo, fan_mass=0.488))


def test_inertia_override_respected():
    override = np.diag([0.5, 0.6, 0.3])
    geo = geometry_from_posture(builtin_posture("P1"), inertia_body=override)
    np.testing.assert_allclose(geo.inertia_body, override)


def test_geometry_deterministic():
    a = geometry_from_posture(builtin_posture("P3"))
    b = geometry_from_posture(builtin_posture("P3"))
    np.testing.assert_array_equal(a.com_body, b.com_body)
    np.testing.assert_array_equal(a.inertia_body, b.inertia_body)
    assert a.weight == b.weight


def test_geometry_arrays_read_only():
    geo = geometry_from_posture(builtin_posture("P1"))
    with pytest.raises(ValueError):
        geo.com_body[0] = 1.0
