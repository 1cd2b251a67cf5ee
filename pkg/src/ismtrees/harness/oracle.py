"""Exhaustive ground-truth recognition for small inputs.

This oracle deliberately avoids the production voting path: relative poses,
vote casting, and pose errors are all computed on plain 4x4 homogeneous
matrices with straight nested loops.  Every vote of every input object is
tried as a candidate reference pose, and for each candidate every object may
contribute its globally best vote.  The maximum weighted objective over all
candidates is the reference value that accumulator-based recognition must
reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import DemonstrationDataset, ObjectId, RecognitionParams
from ..errors import TooLargeForOracleError
from ..topology import RelationTopology

_MAX_OBJECTS = 4
_MAX_LENGTH = 10


def _invert_homogeneous(mat: np.ndarray) -> np.ndarray:
    rot = mat[:3, :3]
    out = np.eye(4)
    out[:3, :3] = rot.T
    out[:3, 3] = -rot.T @ mat[:3, 3]
    return out


def _rotation_angle_deg(ra: np.ndarray, rb: np.ndarray) -> float:
    """Angle of the relative rotation, via atan2 of (sin, cos); stable near zero."""
    rel = ra.T @ rb
    cos_theta = (np.trace(rel) - 1.0) / 2.0
    sin_theta = 0.5 * math.sqrt(
        (rel[2, 1] - rel[1, 2]) ** 2
        + (rel[0, 2] - rel[2, 0]) ** 2
        + (rel[1, 0] - rel[0, 1]) ** 2
    )
    return math.degrees(math.atan2(sin_theta, max(cos_theta, -1.0)))


def _star_center(topology: RelationTopology) -> ObjectId:
    for obj in sorted(topology.objects):
        if topology.degree(obj) == len(topology.objects) - 1:
            return obj
    raise ValueError("oracle expects a star topology (one object related to all others)")


@dataclass
class OracleResult:
    objective_value: float
    reference_matrix: np.ndarray
    assignment: dict


def brute_force_recognition_oracle(
    inputs,
    dataset: DemonstrationDataset,
    topology: RelationTopology,
    params: RecognitionParams,
) -> OracleResult:
    """Best achievable objective for a star-shaped model on the given inputs."""
    n = len(dataset.trajectories)
    length = dataset.length
    if n > _MAX_OBJECTS or length > _MAX_LENGTH:
        raise TooLargeForOracleError(
            f"oracle limited to {_MAX_OBJECTS} objects and length {_MAX_LENGTH}, got n={n}, l={length}"
        )

    center = _star_center(topology)
    center_mats = [p.to_matrix() for p in dataset.trajectories[center].poses]
    votes = {}
    backs = {}
    for oid, traj in dataset.trajectories.items():
        object_mats = [p.to_matrix() for p in traj.poses]
        votes[oid] = [_invert_homogeneous(object_mats[t]) @ center_mats[t] for t in range(length)]
        backs[oid] = [_invert_homogeneous(center_mats[t]) @ object_mats[t] for t in range(length)]

    states = sorted(
        (s for s in inputs if s.id in votes),
        key=lambda s: (s.id, s.token or ""),
    )
    input_mats = [s.pose.to_matrix() for s in states]
    object_ids = sorted({s.id for s in states})

    best = OracleResult(0.0, np.eye(4), {})
    for caster_idx in range(len(states)):
        for vote in votes[states[caster_idx].id]:
            candidate = input_mats[caster_idx] @ vote
            objective = 0.0
            assignment = {}
            for oid in object_ids:
                # one contribution per object: the best (state, vote) pair
                top_sim = 0.0
                top_detail = None
                for idx, state in enumerate(states):
                    if state.id != oid:
                        continue
                    for t, back in enumerate(backs[oid]):
                        expected = candidate @ back
                        pos_dev = float(np.linalg.norm(expected[:3, 3] - input_mats[idx][:3, 3]))
                        ang_dev = _rotation_angle_deg(expected[:3, :3], input_mats[idx][:3, :3])
                        pos_comp = max(0.0, 1.0 - pos_dev / params.tau_pos)
                        rot_comp = max(0.0, 1.0 - ang_dev / params.tau_rot)
                        sim = pos_comp * rot_comp * state.confidence
                        if sim > top_sim:
                            top_sim = sim
                            top_detail = (t + 1, pos_comp, rot_comp)
                if top_sim > 0.0:
                    objective += top_sim
                    assignment[oid] = top_detail
            if objective > best.objective_value:
                best = OracleResult(objective, candidate, assignment)
    return best
