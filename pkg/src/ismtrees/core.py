"""Object/trajectory data model, single-ISM learning, and voting recognition.

A single ISM stores, for every object it covers, the relative poses that were
observed between that object and the model's reference object during a
demonstration.  Recognition lets each input object vote for reference poses
through those stored relations, collects the votes in a sparse spatial grid,
and scores candidate reference poses by how well every object's best vote
agrees with its actually observed pose.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numba
import numpy as np

from .errors import EmptyNeighborhoodError, LengthMismatchError
from .geometry import (
    Pose,
    invert,
    quat_angle_deg,
    quat_mul,
    quat_rotate,
    relative,
)

# placeholder objects always use this instance label (real ids use free-form labels)
PLACEHOLDER_INSTANCE = "0"

# rows per scoring block; bounds peak memory of the vectorized vote evaluation
_SCORE_BLOCK = 1_000_000


@dataclass(frozen=True, order=True)
class ObjectId:
    """Identity of one object: class label plus an instance-distinguishing label."""

    class_label: str
    instance_label: str

    def __str__(self) -> str:
        return f"{self.class_label}/{self.instance_label}"


@dataclass(eq=False)
class ObjectState:
    """One observed (or hypothesized) object: identity, pose, confidence.

    Directly detected objects have confidence 1.0 and no token.  Placeholder
    states stand for a sub-model's recognition result; their token ties them
    back to that result during instance assembly.
    """

    id: ObjectId
    pose: Pose
    is_placeholder: bool = False
    confidence: float = 1.0
    token: Optional[str] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")

    @property
    def sort_key(self):
        return (self.id.class_label, self.id.instance_label, self.token or "")


@dataclass(frozen=True)
class Trajectory:
    """Timed pose sequence of one object over a demonstration."""

    object_id: ObjectId
    poses: tuple

    def __post_init__(self) -> None:
        if len(self.poses) < 1:
            raise ValueError("trajectory needs at least one pose")
        object.__setattr__(self, "poses", tuple(self.poses))

    def __len__(self) -> int:
        return len(self.poses)


@dataclass
class DemonstrationDataset:
    """Per-object trajectories of equal length, demonstrated for one scene category."""

    category_label: str
    trajectories: dict

    def __post_init__(self) -> None:
        if len(self.trajectories) < 2:
            raise ValueError("a demonstration needs at least two objects")
        lengths = {len(t) for t in self.trajectories.values()}
        if len(lengths) != 1:
            raise LengthMismatchError(f"trajectory lengths differ: {sorted(lengths)}")

    @property
    def length(self) -> int:
        return len(next(iter(self.trajectories.values())))

    def object_ids(self) -> list:
        return sorted(self.trajectories)

    def configuration_at(self, t: int) -> list:
        """The demonstrated object configuration at timestep t (0-based)."""
        return [
            ObjectState(oid, traj.poses[t])
            for oid, traj in sorted(self.trajectories.items())
        ]


@dataclass(frozen=True)
class RelativePoseSample:
    """One table entry: object-to-reference vote and its inverse, at one timestep (1-based)."""

    timestep: int
    vote_to_reference: Pose
    back_to_object: Pose


@dataclass
class RecognitionParams:
    """Voting and thresholding parameters shared by recognition and assembly.

    Defaults sit in the millimeter-to-decimeter / one-to-two-digit-degree
    range that the tolerance model targets.
    """

    bin_size: float = 0.1
    tau_pos: float = 0.1
    tau_rot: float = 30.0
    result_keep_threshold: float = 0.5
    eps_r: float = 0.6
    max_results_per_ism: int = 32

    def __post_init__(self) -> None:
        if self.bin_size <= 0:
            raise ValueError("bin_size must be positive")
        if self.tau_pos <= 0:
            raise ValueError("tau_pos must be positive")
        if not 0.0 < self.tau_rot <= 180.0:
            raise ValueError("tau_rot must be in (0, 180] degrees")
        for name in ("result_keep_threshold", "eps_r"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be in [0,1]")
        if self.max_results_per_ism < 1:
            raise ValueError("max_results_per_ism must be >= 1")


@dataclass
class SingleIsm:
    """One learned ISM: vote table and per-object weights keyed by ObjectId.

    Immutable after learning; recognition only reads it, so one model can be
    shared freely across threads.  The weight of a real object is 1; the
    weight of a placeholder input equals the total leaf weight of the
    sub-model it stands for.
    """

    label: str
    reference_id: ObjectId
    vote_table: dict
    weight_table: dict
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        # precompute the columnar vote arrays so recognition never mutates
        # the model and stays safe under concurrent readers
        for object_id in self.vote_table:
            self.arrays_for(object_id)

    @property
    def total_weight(self) -> int:
        return sum(self.weight_table.values())

    @property
    def sample_length(self) -> int:
        return len(next(iter(self.vote_table.values())))

    def arrays_for(self, object_id: ObjectId):
        """Columnar (vote_pos, vote_q, back_pos, back_q) arrays for one object."""
        cached = self._arrays.get(object_id)
        if cached is None:
            samples = self.vote_table[object_id]
            cached = (
                np.stack([s.vote_to_reference.position for s in samples]),
                np.stack([s.vote_to_reference.orientation for s in samples]),
                np.stack([s.back_to_object.position for s in samples]),
                np.stack([s.back_to_object.orientation for s in samples]),
            )
            self._arrays[object_id] = cached
        return cached


@dataclass(frozen=True)
class Participant:
    """One object's contribution to a recognition result.

    ordinal is the state's position in the canonical input order of the
    recognition call; it distinguishes coexisting states that share one
    ObjectId (duplicate detections, sibling placeholder hypotheses, or a
    second copy of the scene in the same input set).
    """

    state: ObjectState
    similarity: float
    position_compliance: float
    orientation_compliance: float
    weight: int
    contribution: float
    ordinal: int = 0

    @property
    def identity(self):
        return (self.state.id, self.state.token or "", self.ordinal)


@dataclass(eq=False)
class RecognitionResult:
    """A scored reference-pose hypothesis of one ISM."""

    ism_label: str
    reference_pose: Pose
    objective_value: float
    confidence: float
    participants: tuple
    total_weight: int
    token: str

    def participant_identities(self) -> frozenset:
        return frozenset(p.identity for p in self.participants)


def learn_single_ism(
    label: str,
    center_trajectory: Trajectory,
    neighbor_trajectories: Iterable[Trajectory],
    weights: Optional[Mapping[ObjectId, int]] = None,
):
    """Learn one ISM from a star of trajectories around a center object.

    Every object (the center included, with trivial identity relations) gets
    one vote-table entry per timestep: the relative pose pointing from the
    object to the center, plus its inverse.  Returns the model together with
    its reference trajectory, which is the center trajectory itself.
    """
    neighbors = sorted(neighbor_trajectories, key=lambda t: t.object_id)
    if not neighbors:
        raise EmptyNeighborhoodError(f"ISM {label!r} has no neighbor trajectories")
    if any(t.object_id == center_trajectory.object_id for t in neighbors):
        raise ValueError("center trajectory must not be among the neighbors")
    length = len(center_trajectory)
    for traj in neighbors:
        if len(traj) != length:
            raise LengthMismatchError(
                f"trajectory {traj.object_id} has length {len(traj)}, expected {length}"
            )

    vote_table = {}
    weight_table = {}
    for traj in [center_trajectory] + neighbors:
        samples = []
        for t in range(length):
            vote = relative(traj.poses[t], center_trajectory.poses[t])
            samples.append(
                RelativePoseSample(
                    timestep=t + 1,
                    vote_to_reference=vote,
                    back_to_object=invert(vote),
                )
            )
        vote_table[traj.object_id] = tuple(samples)
        weight_table[traj.object_id] = (
            int(weights[traj.object_id]) if weights and traj.object_id in weights else 1
        )

    ism = SingleIsm(
        label=label,
        reference_id=ObjectId(label, PLACEHOLDER_INSTANCE),
        vote_table=vote_table,
        weight_table=weight_table,
    )
    return ism, center_trajectory


def position_compliance(expected, actual, tau_pos: float) -> float:
    """Linear falloff from 1 at zero deviation to 0 at or beyond tau_pos meters."""
    if tau_pos <= 0:
        raise ValueError("tau_pos must be positive")
    deviation = float(np.linalg.norm(np.asarray(expected, float) - np.asarray(actual, float)))
    return max(0.0, 1.0 - deviation / tau_pos)


def orientation_compliance(expected, actual, tau_rot: float) -> float:
    """Linear falloff from 1 at zero rotation difference to 0 at or beyond tau_rot degrees."""
    if tau_rot <= 0:
        raise ValueError("tau_rot must be positive")
    angle = float(
        quat_angle_deg(np.asarray(expected, float), np.asarray(actual, float))
    )
    return max(0.0, 1.0 - angle / tau_rot)


@numba.njit(cache=True)
def _score_kernel(
    cand_pos,
    cand_q,
    back_pos,
    back_q,
    actual_pos,
    actual_q,
    conf,
    seg_starts,
    seg_weights,
    tau_pos,
    tau_rot,
    out_objectives,
    out_best_vals,
    out_best_rows,
):
    """Per candidate and object segment, the best support-vote similarity.

    For every candidate reference pose and every support row: compose the
    candidate with the row's inverted relation, compare against the row's
    actually observed pose, and turn the position/angle deviations into the
    linear compliances.  Keeps the first row on exact similarity ties.
    """
    n_cands = cand_pos.shape[0]
    n_rows = back_pos.shape[0]
    n_segs = seg_starts.shape[0]
    for i in range(n_cands):
        px, py, pz = cand_pos[i, 0], cand_pos[i, 1], cand_pos[i, 2]
        cw, cx, cy, cz = cand_q[i, 0], cand_q[i, 1], cand_q[i, 2], cand_q[i, 3]
        objective = 0.0
        for s in range(n_segs):
            start = seg_starts[s]
            stop = seg_starts[s + 1] if s + 1 < n_segs else n_rows
            best = 0.0
            best_row = n_rows
            for j in range(start, stop):
                # expected position: candidate position plus rotated back-translation
                bx, by, bz = back_pos[j, 0], back_pos[j, 1], back_pos[j, 2]
                tx = 2.0 * (cy * bz - cz * by)
                ty = 2.0 * (cz * bx - cx * bz)
                tz = 2.0 * (cx * by - cy * bx)
                ex = px + bx + cw * tx + (cy * tz - cz * ty)
                ey = py + by + cw * ty + (cz * tx - cx * tz)
                ez = pz + bz + cw * tz + (cx * ty - cy * tx)
                dx = ex - actual_pos[j, 0]
                dy = ey - actual_pos[j, 1]
                dz = ez - actual_pos[j, 2]
                pos_comp = 1.0 - math.sqrt(dx * dx + dy * dy + dz * dz) / tau_pos
                if pos_comp <= 0.0:
                    continue
                # expected orientation: candidate orientation times back rotation
                bw, bqx, bqy, bqz = back_q[j, 0], back_q[j, 1], back_q[j, 2], back_q[j, 3]
                ew = cw * bw - cx * bqx - cy * bqy - cz * bqz
                eqx = cw * bqx + cx * bw + cy * bqz - cz * bqy
                eqy = cw * bqy - cx * bqz + cy * bw + cz * bqx
                eqz = cw * bqz + cx * bqy - cy * bqx + cz * bw
                aw, aqx, aqy, aqz = actual_q[j, 0], actual_q[j, 1], actual_q[j, 2], actual_q[j, 3]
                rw = ew * aw + eqx * aqx + eqy * aqy + eqz * aqz
                rx = -ew * aqx + eqx * aw - eqy * aqz + eqz * aqy
                ry = -ew * aqy + eqx * aqz + eqy * aw - eqz * aqx
                rz = -ew * aqz - eqx * aqy + eqy * aqx + eqz * aw
                angle = math.degrees(
                    2.0 * math.atan2(math.sqrt(rx * rx + ry * ry + rz * rz), abs(rw))
                )
                rot_comp = 1.0 - angle / tau_rot
                if rot_comp <= 0.0:
                    continue
                sim = pos_comp * rot_comp * conf[j]
                if sim > best:
                    best = sim
                    best_row = j
            out_best_vals[i, s] = best
            out_best_rows[i, s] = best_row
            objective += best * seg_weights[s]
        out_objectives[i] = objective


class _VoteField:
    """Flattened vote data of all voting states, grouped by ObjectId segments."""

    def __init__(self, states: Sequence[ObjectState], ism: SingleIsm):
        cand_pos, cand_q = [], []
        back_pos, back_q = [], []
        actual_pos, actual_q = [], []
        conf, state_ref, state_ordinal = [], [], []
        seg_starts, seg_ids, seg_weights = [], [], []
        row = 0
        for ordinal, state in enumerate(states):
            arrays = ism.arrays_for(state.id)
            vote_pos, vote_q, b_pos, b_q = arrays
            n = vote_pos.shape[0]
            # candidate reference hypotheses cast by this state
            cand_pos.append(state.pose.position + quat_rotate(state.pose.orientation, vote_pos))
            cand_q.append(quat_mul(state.pose.orientation, vote_q))
            # support rows used when scoring any candidate against this state
            back_pos.append(b_pos)
            back_q.append(b_q)
            actual_pos.append(np.broadcast_to(state.pose.position, (n, 3)))
            actual_q.append(np.broadcast_to(state.pose.orientation, (n, 4)))
            conf.append(np.full(n, state.confidence))
            state_ref.extend([state] * n)
            state_ordinal.extend([ordinal] * n)
            if not seg_ids or seg_ids[-1] != state.id:
                seg_starts.append(row)
                seg_ids.append(state.id)
                seg_weights.append(ism.weight_table[state.id])
            row += n

        self.cand_pos = np.concatenate(cand_pos)
        self.cand_q = np.concatenate(cand_q)
        self.back_pos = np.concatenate(back_pos)
        self.back_q = np.concatenate(back_q)
        self.actual_pos = np.concatenate(actual_pos)
        self.actual_q = np.concatenate(actual_q)
        self.conf = np.concatenate(conf)
        self.states = state_ref
        self.state_ordinals = state_ordinal
        self.seg_starts = np.asarray(seg_starts, dtype=np.intp)
        self.seg_ids = seg_ids
        self.seg_weights = np.asarray(seg_weights, dtype=float)

    def __len__(self) -> int:
        return self.cand_pos.shape[0]

    def score_block(self, cand_idx: np.ndarray, params: RecognitionParams):
        """Scaled similarities of every support row against a block of candidates.

        Returns (sims, pos_comp, rot_comp), each shaped (len(cand_idx), rows).
        sims include the voting state's confidence factor.
        """
        cpos = self.cand_pos[cand_idx][:, None, :]
        cq = self.cand_q[cand_idx][:, None, :]
        expected_pos = cpos + quat_rotate(cq, self.back_pos[None, :, :])
        pos_dev = np.linalg.norm(expected_pos - self.actual_pos[None, :, :], axis=-1)
        expected_q = quat_mul(cq, self.back_q[None, :, :])
        ang_dev = quat_angle_deg(expected_q, self.actual_q[None, :, :])
        pos_comp = np.clip(1.0 - pos_dev / params.tau_pos, 0.0, None)
        rot_comp = np.clip(1.0 - ang_dev / params.tau_rot, 0.0, None)
        sims = pos_comp * rot_comp * self.conf[None, :]
        return sims, pos_comp, rot_comp

    def evaluate(self, params: RecognitionParams):
        """One fused scoring pass over every candidate.

        Returns (objectives, best_vals, best_rows): the weighted objective per
        candidate, plus per (candidate, object segment) the best support value
        and the row achieving it (first row on exact ties).
        """
        n = len(self)
        n_segs = len(self.seg_starts)
        objectives = np.empty(n)
        best_vals = np.empty((n, n_segs))
        best_rows = np.empty((n, n_segs), dtype=np.int64)
        _score_kernel(
            self.cand_pos,
            self.cand_q,
            self.back_pos,
            self.back_q,
            self.actual_pos,
            self.actual_q,
            self.conf,
            self.seg_starts.astype(np.int64),
            self.seg_weights,
            params.tau_pos,
            params.tau_rot,
            objectives,
            best_vals,
            best_rows,
        )
        return objectives, best_vals, best_rows


def _canonical_states(inputs: Iterable[ObjectState], ism: SingleIsm) -> list:
    """Filter to vote-table objects and sort canonically.

    States sharing one ObjectId (duplicate detections, sibling placeholder
    hypotheses, scene copies) all remain as voting alternatives; per
    candidate, at most one of them contributes, so no ObjectId is ever
    counted twice in a result.
    """
    keyed = [
        (state.sort_key, idx, state)
        for idx, state in enumerate(inputs)
        if state.id in ism.vote_table
    ]
    keyed.sort(key=lambda item: (item[0], item[1]))
    return [state for _, _, state in keyed]


def _winner_identities(field_: _VoteField, idx: int, best_vals, best_rows) -> list:
    """Participant identity tuples of one candidate, without materialization."""
    identities = []
    for s in np.flatnonzero(best_vals[idx] > 0.0):
        row = int(best_rows[idx, s])
        state = field_.states[row]
        identities.append((state.id, state.token or "", field_.state_ordinals[row]))
    return identities


def _materialize(
    field_: _VoteField,
    indices: list,
    best_vals,
    best_rows,
    params: RecognitionParams,
) -> dict:
    """Full participant tuples for the surviving candidates only."""
    if not indices:
        return {}
    _, pos_comp, rot_comp = field_.score_block(np.asarray(indices, dtype=np.intp), params)
    out = {}
    for local, idx in enumerate(indices):
        participants = []
        for s in np.flatnonzero(best_vals[idx] > 0.0):
            row = int(best_rows[idx, s])
            weight = int(field_.seg_weights[s])
            value = float(best_vals[idx, s])
            participants.append(
                Participant(
                    state=field_.states[row],
                    similarity=float(pos_comp[local, row] * rot_comp[local, row]),
                    position_compliance=float(pos_comp[local, row]),
                    orientation_compliance=float(rot_comp[local, row]),
                    weight=weight,
                    contribution=weight * value,
                    ordinal=field_.state_ordinals[row],
                )
            )
        out[idx] = tuple(participants)
    return out


def recognize_single_ism(
    inputs: Iterable[ObjectState],
    ism: SingleIsm,
    params: RecognitionParams,
    token_counter: Optional[Iterable[int]] = None,
) -> list:
    """Recognize one ISM in a set of object states.

    Every input whose ObjectId is covered by the vote table casts one vote
    per stored relative pose.  Votes are bucketed on a sparse cubic grid;
    each nonempty bucket (scanned together with its 26 neighbors so bucket
    boundaries cannot split a cluster) nominates its best-scoring vote as a
    candidate reference pose.  A candidate's score lets every distinct
    ObjectId contribute its single best vote.  Candidates whose participant
    set is contained in a stronger result are dropped.

    Returns results ordered by descending objective value; deterministic for
    identical inputs.
    """
    states = _canonical_states(inputs, ism)
    if not states:
        return []
    field_ = _VoteField(states, ism)
    objectives, best_vals, best_rows = field_.evaluate(params)

    buckets = {}
    bucket_keys = np.floor(field_.cand_pos / params.bin_size).astype(np.int64)
    for i in range(len(field_)):
        buckets.setdefault(tuple(bucket_keys[i]), []).append(i)

    neighbor_offsets = [
        (dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    ]
    winner_indices = set()
    for key in sorted(buckets):
        scope = []
        for off in neighbor_offsets:
            scope.extend(buckets.get((key[0] + off[0], key[1] + off[1], key[2] + off[2]), ()))
        scope.sort()
        values = objectives[scope]
        top = float(values.max())
        if top <= 0.0:
            continue
        # group near-ties so that mathematically equal candidates (whose float
        # objectives differ only by rounding) break deterministically to the
        # earliest candidate in canonical order instead of by rounding noise;
        # this also keeps the winning pose stable under rigid motion
        tol = 1e-12 * max(1.0, abs(top))
        winner_indices.add(scope[int(np.argmax(values >= top - tol))])

    raw = []
    for idx in sorted(winner_indices):
        identities = _winner_identities(field_, idx, best_vals, best_rows)
        if identities:
            raw.append((float(objectives[idx]), sorted(identities), idx))
    raw.sort(key=lambda r: (-r[0], r[1], r[2]))

    kept = []
    for objective, ids, idx in raw:
        id_set = frozenset(ids)
        dominated = any(
            k_ids >= id_set and k_obj >= objective for k_obj, k_ids, _ in kept
        )
        if not dominated:
            kept.append((objective, id_set, idx))

    participants_by_idx = _materialize(
        field_, [idx for _, _, idx in kept], best_vals, best_rows, params
    )
    if token_counter is None:
        token_counter = itertools.count()
    total_weight = ism.total_weight
    results = []
    for objective, _, idx in kept:
        results.append(
            RecognitionResult(
                ism_label=ism.label,
                reference_pose=Pose(field_.cand_pos[idx], field_.cand_q[idx]),
                objective_value=objective,
                confidence=min(1.0, objective / total_weight),
                participants=participants_by_idx[idx],
                total_weight=total_weight,
                token=f"I{next(token_counter)}",
            )
        )
    return results
