"""Cartesian pose math: quaternions, minimum-jerk time scaling and
point-to-point trajectory segments.

Quaternions are numpy arrays in (x, y, z, w) order. ``quat_multiply(a, b)``
composes Hamilton-style: the result rotates by ``b`` first, then ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IDENTITY_QUAT = np.array([0.0, 0.0, 0.0, 1.0])


class DomainError(ValueError):
    """A scalar argument fell outside its documented domain."""


def normalize_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"quaternion must have 4 components, got shape {q.shape}")
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ValueError("zero-norm quaternion")
    return q / norm


def quat_multiply(a, b) -> np.ndarray:
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    x, y, z, w = q
    return np.array([-x, -y, -z, w])


def quat_to_matrix(q) -> np.ndarray:
    x, y, z, w = normalize_quat(q)
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)],
            [2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)],
            [2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)],
        ]
    )


def rotate_vector(q, v) -> np.ndarray:
    return quat_to_matrix(q) @ np.asarray(v, dtype=float)


def rotate_points(q, pts) -> np.ndarray:
    """Rotate an (N, 3) array of points by the quaternion ``q``."""
    return np.asarray(pts, dtype=float) @ quat_to_matrix(q).T


def quat_angle_deg(a, b) -> float:
    """Smallest rotation angle between two orientations, in degrees."""
    dot = abs(float(np.dot(normalize_quat(a), normalize_quat(b))))
    return float(np.degrees(2.0 * np.arccos(min(1.0, dot))))


def euler_xyz_deg_to_quat(angles) -> np.ndarray:
    """World-frame (extrinsic) XYZ Euler angles in degrees to a quaternion.

    Rotations are applied about the fixed world axes in x, y, z order, so the
    composite is qz * qy * qx.
    """
    rx, ry, rz = np.radians(np.asarray(angles, dtype=float))
    qx = np.array([np.sin(rx / 2), 0.0, 0.0, np.cos(rx / 2)])
    qy = np.array([0.0, np.sin(ry / 2), 0.0, np.cos(ry / 2)])
    qz = np.array([0.0, 0.0, np.sin(rz / 2), np.cos(rz / 2)])
    return normalize_quat(quat_multiply(qz, quat_multiply(qy, qx)))


def slerp(a, b, fraction: float) -> np.ndarray:
    """Shortest-arc great-circle interpolation between two unit quaternions.

    Antipodal representations are resolved by flipping ``b`` into the same
    hemisphere as ``a``. Near-parallel quaternions fall back to normalized
    linear interpolation.
    """
    a = normalize_quat(a)
    b = normalize_quat(b)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > 0.9995:
        return normalize_quat(a + fraction * (b - a))
    theta0 = np.arccos(dot)
    theta = theta0 * fraction
    s0 = np.cos(theta) - dot * np.sin(theta) / np.sin(theta0)
    s1 = np.sin(theta) / np.sin(theta0)
    return normalize_quat(s0 * a + s1 * b)


def min_jerk_scalar(tau: float) -> float:
    """Quintic time-scaling 10*tau^3 - 15*tau^4 + 6*tau^5 on [0, 1].

    The unique quintic with zero velocity and acceleration at both ends.
    """
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"tau must be in [0, 1], got {tau}")
    return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))


@dataclass
class Pose:
    """A rigid transform: translation in meters plus a unit quaternion."""

    translation: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=float).reshape(3).copy()
        self.orientation = normalize_quat(self.orientation)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), IDENTITY_QUAT)

    def copy(self) -> "Pose":
        return Pose(self.translation.copy(), self.orientation.copy())

    def transform_point(self, p) -> np.ndarray:
        return self.translation + rotate_vector(self.orientation, p)

    def transform_points(self, pts) -> np.ndarray:
        return self.translation + rotate_points(self.orientation, pts)

    def compose(self, other: "Pose") -> "Pose":
        return Pose(
            self.transform_point(other.translation),
            quat_multiply(self.orientation, other.orientation),
        )

    def inverse(self) -> "Pose":
        inv_q = quat_conjugate(self.orientation)
        return Pose(rotate_vector(inv_q, -self.translation), inv_q)


@dataclass
class TrajectorySegment:
    """A point-to-point plan with zero start/goal velocity and acceleration."""

    start: Pose
    goal: Pose
    duration: float
    t0: float

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError(f"segment duration must be positive, got {self.duration}")

    @property
    def end_time(self) -> float:
        return self.t0 + self.duration


def segment_pose(seg: TrajectorySegment, t: float) -> Pose:
    """Pose along a segment at absolute time ``t``.

    Translation moves on the straight start-goal line re-timed by the
    minimum-jerk scalar; orientation follows the shortest great-circle arc
    with the same timing.
    """
    if t < seg.t0 or t > seg.end_time:
        raise DomainError(f"t={t} outside segment [{seg.t0}, {seg.end_time}]")
    tau = (t - seg.t0) / seg.duration
    s = min_jerk_scalar(min(1.0, max(0.0, tau)))
    translation = seg.start.translation + s * (seg.goal.translation - seg.start.translation)
    orientation = slerp(seg.start.orientation, seg.goal.orientation, s)
    return Pose(translation, orientation)
