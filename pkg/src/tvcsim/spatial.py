"""Frames, rotations, and quaternion kinematics.

Conventions used across the package:

* World frame {W}: z up, x forward (the robot's facing direction), y left.
  The body frame {B} coincides with {W} at zero attitude.
* Quaternions are scalar-first ``[w, x, y, z]`` numpy arrays and map body
  vectors into the world: ``v_w = R(q) @ v_b``.
* Euler angles are Z-Y-X intrinsic (yaw, then pitch, then roll), so "pitch"
  equals the single rotation angle of ``rot_y`` when roll = yaw = 0.
  Positive pitch tips the body x-axis downward (a forward dive).
* Angles are radians everywhere inside the package; degrees appear only at
  CLI/CSV boundaries.

All functions are pure and safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Vec3 = np.ndarray  # shape (3,), float
Quat = np.ndarray  # shape (4,), float, scalar-first [w, x, y, z]

GIMBAL_LOCK_MARGIN = 1e-6  # |pitch| > pi/2 - margin means yaw/roll are not unique


@dataclass
class EulerAngles:
    """Z-Y-X intrinsic attitude. pitch in [-pi/2, pi/2], roll/yaw in (-pi, pi]."""

    roll: float
    pitch: float
    yaw: float
    gimbal_lock: bool = False


def rot_x(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(theta: float) -> np.ndarray:
    """Right-handed rotation about the body y-axis."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def is_rotation(mat: np.ndarray, tol: float = 1e-9) -> bool:
    """True if mat is orthonormal with determinant +1 within tol."""
    mat = np.asarray(mat, dtype=float)
    if mat.shape != (3, 3):
        return False
    ortho = np.abs(mat.T @ mat - np.eye(3)).max() <= tol
    return bool(ortho and abs(np.linalg.det(mat) - 1.0) <= tol)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


# ---------------------------------------------------------------------------
# Quaternions
# ---------------------------------------------------------------------------

def quat_identity() -> Quat:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: Quat) -> Quat:
    q = np.asarray(q, dtype=float)
    n = math.sqrt(float(q @ q))
    if n < 1e-300:
        raise ValueError("cannot normalize a zero quaternion")
    return q / n


def quat_multiply(q1: Quat, q2: Quat) -> Quat:
    """Hamilton product q1 * q2 (composition: R(q1*q2) = R(q1) @ R(q2))."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    axis = np.asarray(axis, dtype=float)
    n = math.sqrt(float(axis @ axis))
    if n < 1e-300:
        if abs(angle) > 0.0:
            raise ValueError("rotation axis must be nonzero")
        return quat_identity()
    half = 0.5 * angle
    s = math.sin(half) / n
    return np.array([math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_from_pitch(theta: float) -> Quat:
    """Pure pitch attitude: R(q) == rot_y(theta)."""
    half = 0.5 * theta
    return np.array([math.cos(half), 0.0, math.sin(half), 0.0])


def quat_to_matrix(q: Quat) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_integrate(q: Quat, omega: Vec3, dt: float) -> Quat:
    """Advance attitude by body-frame rate omega over dt (exponential map).

    Exact for constant omega; always returns a unit quaternion.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    wx, wy, wz = (omega[0] * dt, omega[1] * dt, omega[2] * dt)
    angle = math.sqrt(wx * wx + wy * wy + wz * wz)
    if angle < 1e-12:
        # first-order small-angle increment
        dq = np.array([1.0, 0.5 * wx, 0.5 * wy, 0.5 * wz])
    else:
        half = 0.5 * angle
        s = math.sin(half) / angle
        dq = np.array([math.cos(half), wx * s, wy * s, wz * s])
    return quat_normalize(quat_multiply(q, dq))


def euler_to_quat(angles: EulerAngles) -> Quat:
    """Z-Y-X intrinsic composition: q = qz(yaw) * qy(pitch) * qx(roll)."""
    cy, sy = math.cos(0.5 * angles.yaw), math.sin(0.5 * angles.yaw)
    cp, sp = math.cos(0.5 * angles.pitch), math.sin(0.5 * angles.pitch)
    cr, sr = math.cos(0.5 * angles.roll), math.sin(0.5 * angles.roll)
    return np.array(
        [
            cy * cp * cr + sy * sp * sr,
            cy * cp * sr - sy * sp * cr,
            cy * sp * cr + sy * cp * sr,
            sy * cp * cr - cy * sp * sr,
        ]
    )


def quat_to_euler(q: Quat) -> EulerAngles:
    """Z-Y-X intrinsic decomposition of a unit quaternion.

    Within gimbal-lock margin of |pitch| = pi/2 the yaw/roll split is not
    unique; roll is set to zero there and the result is flagged.
    """
    r = quat_to_matrix(q)
    sp = -r[2, 0]
    sp = min(1.0, max(-1.0, sp))
    pitch = math.asin(sp)
    if abs(pitch) > 0.5 * math.pi - GIMBAL_LOCK_MARGIN:
        # fold the degenerate rotation into yaw
        yaw = math.atan2(-r[0, 1], r[1, 1])
        return EulerAngles(roll=0.0, pitch=pitch, yaw=yaw, gimbal_lock=True)
    roll = math.atan2(r[2, 1], r[2, 2])
    yaw = math.atan2(r[1, 0], r[0, 0])
    return EulerAngles(roll=roll, pitch=pitch, yaw=yaw)
