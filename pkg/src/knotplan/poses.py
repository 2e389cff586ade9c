"""Grasp and target poses under the semi-planar constraint.

All planned poses keep the gripper's z-axis vertical; the y-axis follows
the rope tangent projected into the table plane, and x completes the
right-handed frame. Heights are pure z translations.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .curve import Curve, evaluate, tangent
from .errors import DegenerateTangentError, NegativeHeightError

ORTHONORMAL_TOL = 1e-9
MIN_HORIZONTAL_TANGENT = 1e-6

WORLD_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Pose:
    """Position plus a right-handed orthonormal frame (columns = x, y, z)."""

    position: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        frame = np.asarray(self.frame, dtype=float)
        if pos.shape != (3,) or frame.shape != (3, 3):
            raise ValueError("pose needs a 3-vector position and 3x3 frame")
        if np.max(np.abs(frame.T @ frame - np.eye(3))) > ORTHONORMAL_TOL:
            raise ValueError("frame is not orthonormal")
        if abs(np.linalg.det(frame) - 1.0) > ORTHONORMAL_TOL:
            raise ValueError("frame is not right-handed")
        pos.setflags(write=False)
        frame.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "frame", frame)

    @property
    def x_axis(self) -> np.ndarray:
        return self.frame[:, 0]

    @property
    def y_axis(self) -> np.ndarray:
        return self.frame[:, 1]

    @property
    def z_axis(self) -> np.ndarray:
        return self.frame[:, 2]

    @property
    def yaw(self) -> float:
        """Angle of the y-axis in the table plane."""
        return math.atan2(self.frame[1, 1], self.frame[0, 1])

    def quaternion(self) -> np.ndarray:
        """Unit quaternion (w, x, y, z), Hamilton convention."""
        q = Rotation.from_matrix(self.frame).as_quat()  # x, y, z, w
        q = np.concatenate(([q[3]], q[:3]))
        if q[0] < 0:
            q = -q
        return q / np.linalg.norm(q)

    def to_dict(self) -> dict:
        return {
            "position": self.position.tolist(),
            "quaternion_wxyz": self.quaternion().tolist(),
        }


def grasp_pose(curve: Curve, s: float) -> Pose:
    """Semi-planar grasp pose at S(s): z up, y along the horizontal
    projection of the tangent, x = y cross z.

    Raises DegenerateTangentError when the tangent is within 1e-6 of
    vertical and no horizontal direction exists.
    """
    position = evaluate(curve, s)
    t = tangent(curve, s)
    horizontal = np.array([t[0], t[1], 0.0])
    norm = np.linalg.norm(horizontal)
    if norm < MIN_HORIZONTAL_TANGENT:
        raise DegenerateTangentError(
            f"tangent at s={s} is near-vertical (horizontal norm {norm:.2e})"
        )
    y = horizontal / norm
    x = np.cross(y, WORLD_Z)
    return Pose(position=position, frame=np.column_stack([x, y, WORLD_Z]))


def lifted(pose: Pose, h: float) -> Pose:
    """Same orientation, position raised by h meters."""
    if h < 0:
        raise NegativeHeightError(f"lift height must be >= 0, got {h}")
    return Pose(position=pose.position + np.array([0.0, 0.0, h]), frame=pose.frame)


def rotated_about_z(pose: Pose, angle: float) -> Pose:
    """Frame rotated by `angle` radians about the world z-axis; position
    unchanged."""
    c, s = math.cos(angle), math.sin(angle)
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return Pose(position=pose.position, frame=rz @ pose.frame)


def translated_to(pose: Pose, x: float, y: float, z: float) -> Pose:
    """Same orientation at a new position."""
    return Pose(position=np.array([x, y, z]), frame=pose.frame)
