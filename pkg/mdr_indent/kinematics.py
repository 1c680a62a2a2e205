"""
Denavit-Hartenberg forward kinematics.

Standard (distal) convention: each joint contributes
Rot_z(θ) · Trans_z(d) · Trans_x(a) · Rot_x(α), and the end-effector pose is the
ordered product of the joint transforms. Only revolute joints are modelled;
the joint variable is added to the table's θ offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np


@dataclass(frozen=True, slots=True)
class DHJoint:
    """One row of a DH table: link length a (m), twist alpha (rad), offset d_offset (m), angle theta (rad)."""

    a: float
    alpha: float
    d_offset: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        for name in ("a", "alpha", "d_offset", "theta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"DH parameter {name} must be finite, got {value!r}")

    def at(self, q: float) -> "DHJoint":
        """Joint with its variable set to q (added to the table offset)."""
        return DHJoint(a=self.a, alpha=self.alpha, d_offset=self.d_offset, theta=self.theta + q)


@dataclass(frozen=True, slots=True, eq=False)
class Pose:
    """Rigid transform: 3×3 rotation and 3-vector position (m)."""

    rotation: np.ndarray
    position: np.ndarray

    @classmethod
    def identity(cls) -> "Pose":
        return cls(rotation=np.eye(3), position=np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Pose":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (4, 4):
            raise ValueError(f"homogeneous transform must be 4x4, got {matrix.shape}")
        return cls(rotation=matrix[:3, :3].copy(), position=matrix[:3, 3].copy())

    @property
    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.position
        return out

    @property
    def z(self) -> float:
        return float(self.position[2])

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(
            rotation=self.rotation @ other.rotation,
            position=self.rotation @ other.position + self.position,
        )

    def orthonormality_error(self) -> float:
        """Largest elementwise deviation of RᵀR from I, or of det R from +1."""
        gram = self.rotation.T @ self.rotation - np.eye(3)
        return float(max(np.max(np.abs(gram)), abs(np.linalg.det(self.rotation) - 1.0)))


@dataclass(frozen=True, slots=True)
class DHChain:
    """Ordered serial chain of revolute DH joints."""

    joints: Tuple[DHJoint, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "joints", tuple(self.joints))
        if len(self.joints) < 1:
            raise ValueError("a DH chain needs at least one joint")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> "DHChain":
        """Build from `(a, alpha, d, theta0)` rows."""
        return cls(tuple(DHJoint(*map(float, row)) for row in rows))

    def __len__(self) -> int:
        return len(self.joints)

    def split(self, index: int) -> Tuple["DHChain", "DHChain"]:
        if not 0 < index < len(self.joints):
            raise ValueError(f"split index must lie in 1..{len(self.joints) - 1}, got {index}")
        return DHChain(self.joints[:index]), DHChain(self.joints[index:])


def joint_transform(joint: DHJoint) -> Pose:
    """Rot_z(θ) · Trans_z(d) · Trans_x(a) · Rot_x(α)."""
    ct, st = math.cos(joint.theta), math.sin(joint.theta)
    ca, sa = math.cos(joint.alpha), math.sin(joint.alpha)
    rotation = np.array(
        [
            [ct, -st * ca, st * sa],
            [st, ct * ca, -ct * sa],
            [0.0, sa, ca],
        ]
    )
    position = np.array([joint.a * ct, joint.a * st, joint.d_offset])
    return Pose(rotation=rotation, position=position)


def forward_kinematics(chain: DHChain, q: Sequence[float]) -> Pose:
    """End-effector pose T_1 · T_2 ⋯ T_m for joint vector q (rad)."""
    q = np.asarray(q, dtype=float).ravel()
    if q.shape[0] != len(chain):
        raise ValueError(f"joint vector has {q.shape[0]} entries, chain has {len(chain)} joints")
    pose = Pose.identity()
    for joint, qi in zip(chain.joints, q):
        pose = pose @ joint_transform(joint.at(float(qi)))
    return pose


def end_effector_heights(chain: DHChain, q: np.ndarray) -> np.ndarray:
    """z_EE for every row of a (samples × joints) joint-angle matrix."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    return np.array([forward_kinematics(chain, row).z for row in q])
