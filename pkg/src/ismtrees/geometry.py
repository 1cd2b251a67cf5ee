"""Rigid-body pose algebra: positions plus unit quaternions.

Poses are stored as position + quaternion rather than 4x4 matrices so the
unit-norm invariant stays testable and long composition chains do not drift.
Matrices appear only at conversion boundaries. All operations are pure and
re-entrant; tolerances in this module are 1e-9 absolute.

Quaternion convention is (w, x, y, z), Hamilton product, right-handed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ATOL = 1e-9


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product, broadcasting over leading dimensions."""
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def _cross3(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # plain component form; np.cross pays moveaxis overhead on every call
    return np.stack(
        [
            u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1],
            u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2],
            u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0],
        ],
        axis=-1,
    )


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vectors v by quaternions q, broadcasting over leading dims."""
    qw = q[..., 0:1]
    qv = q[..., 1:4]
    v = np.asarray(v, dtype=float)
    t = 2.0 * _cross3(qv, np.broadcast_to(v, np.broadcast_shapes(qv.shape, v.shape)))
    return v + qw * t + _cross3(qv, t)


def quat_conj(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float, copy=True)
    out[..., 1:4] = -out[..., 1:4]
    return out


def quat_angle_deg(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimal rotation angle between unit quaternions, in degrees.

    Respects the double cover (q and -q describe the same rotation), so the
    result lies in [0, 180].  Uses the atan2 form, which stays well
    conditioned for near-identical orientations where acos(dot) loses
    half the significant digits.
    """
    rel = quat_mul(a, quat_conj(b))
    sin_half = np.linalg.norm(rel[..., 1:4], axis=-1)
    cos_half = np.abs(rel[..., 0])
    return np.degrees(2.0 * np.arctan2(sin_half, cos_half))


@dataclass(frozen=True)
class Pose:
    """A rigid 6-DoF transform: position in meters, unit quaternion (w,x,y,z).

    The quaternion is renormalized on construction; a zero-norm quaternion is
    rejected. Instances are immutable and safe to share across threads.
    """

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=float).reshape(3)
        quat = np.asarray(self.orientation, dtype=float).reshape(4)
        norm = float(np.linalg.norm(quat))
        if norm < 1e-12:
            raise ValueError("orientation quaternion has zero norm")
        if abs(norm - 1.0) > ATOL:
            quat = quat / norm
        pos.setflags(write=False)
        quat.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "Pose":
        return Pose(np.array([x, y, z], dtype=float), np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_axis_angle(axis, angle_deg: float, position=(0.0, 0.0, 0.0)) -> "Pose":
        ax = np.asarray(axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        half = math.radians(angle_deg) / 2.0
        quat = np.concatenate([[math.cos(half)], math.sin(half) * ax])
        return Pose(np.asarray(position, dtype=float), quat)

    def to_matrix(self) -> np.ndarray:
        """Return the equivalent 4x4 homogeneous transform."""
        w, x, y, z = self.orientation
        rot = np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )
        mat = np.eye(4)
        mat[:3, :3] = rot
        mat[:3, 3] = self.position
        return mat

    @staticmethod
    def from_matrix(mat: np.ndarray) -> "Pose":
        """Build a pose from a 4x4 homogeneous transform (rotation part must be orthonormal)."""
        mat = np.asarray(mat, dtype=float)
        rot = mat[:3, :3]
        trace = rot[0, 0] + rot[1, 1] + rot[2, 2]
        if trace > 0:
            s = math.sqrt(trace + 1.0) * 2.0
            quat = np.array(
                [0.25 * s, (rot[2, 1] - rot[1, 2]) / s, (rot[0, 2] - rot[2, 0]) / s, (rot[1, 0] - rot[0, 1]) / s]
            )
        elif rot[0, 0] > rot[1, 1] and rot[0, 0] > rot[2, 2]:
            s = math.sqrt(1.0 + rot[0, 0] - rot[1, 1] - rot[2, 2]) * 2.0
            quat = np.array(
                [(rot[2, 1] - rot[1, 2]) / s, 0.25 * s, (rot[0, 1] + rot[1, 0]) / s, (rot[0, 2] + rot[2, 0]) / s]
            )
        elif rot[1, 1] > rot[2, 2]:
            s = math.sqrt(1.0 + rot[1, 1] - rot[0, 0] - rot[2, 2]) * 2.0
            quat = np.array(
                [(rot[0, 2] - rot[2, 0]) / s, (rot[0, 1] + rot[1, 0]) / s, 0.25 * s, (rot[1, 2] + rot[2, 1]) / s]
            )
        else:
            s = math.sqrt(1.0 + rot[2, 2] - rot[0, 0] - rot[1, 1]) * 2.0
            quat = np.array(
                [(rot[1, 0] - rot[0, 1]) / s, (rot[0, 2] + rot[2, 0]) / s, (rot[1, 2] + rot[2, 1]) / s, 0.25 * s]
            )
        return Pose(mat[:3, 3], quat)

    def approx_equal(self, other: "Pose", atol: float = ATOL) -> bool:
        if np.max(np.abs(self.position - other.position)) > atol:
            return False
        # double cover: q and -q are the same rotation
        diff = min(
            float(np.max(np.abs(self.orientation - other.orientation))),
            float(np.max(np.abs(self.orientation + other.orientation))),
        )
        return diff <= atol


def compose(a: Pose, b: Pose) -> Pose:
    """Chain two poses; equals the matrix product of their 4x4 forms (a then b)."""
    position = a.position + quat_rotate(a.orientation, b.position)
    orientation = quat_mul(a.orientation, b.orientation)
    return Pose(position, orientation)


def invert(p: Pose) -> Pose:
    """Inverse pose: compose(p, invert(p)) is the identity."""
    conj = quat_conj(p.orientation)
    return Pose(-quat_rotate(conj, p.position), conj)


def relative(from_pose: Pose, to_pose: Pose) -> Pose:
    """The pose r with compose(from_pose, r) == to_pose."""
    return compose(invert(from_pose), to_pose)


def position_distance(a: Pose, b: Pose) -> float:
    """Euclidean distance between positions, meters."""
    return float(np.linalg.norm(a.position - b.position))


def orientation_angle(a: Pose, b: Pose) -> float:
    """Minimal rotation angle between orientations, degrees in [0, 180]."""
    return float(quat_angle_deg(a.orientation, b.orientation))


