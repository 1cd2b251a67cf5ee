"""Seeded synthetic demonstrations and perturbed test configurations.

Every generator here is a pure function of its seed: identical spec in,
identical dataset out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DemonstrationDataset, ObjectId, ObjectState, Trajectory
from ..geometry import Pose, compose


@dataclass
class ScenarioSpec:
    """Shape of one synthetic demonstration.

    motion selects how objects move over the trajectory:
      static        objects never move
      jitter        static bases plus per-timestep Gaussian noise
      rigid_groups  objects split into groups; each group moves rigidly as a whole
    """

    object_count: int
    trajectory_length: int
    motion: str = "static"
    jitter_sigma: float = 0.01
    jitter_rot_sigma_deg: float = 1.0
    workspace: float = 1.0
    group_count: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.object_count < 2:
            raise ValueError("need at least two objects")
        if self.trajectory_length < 1:
            raise ValueError("trajectory length must be >= 1")
        if self.motion not in ("static", "jitter", "rigid_groups"):
            raise ValueError(f"unknown motion model {self.motion!r}")
        if self.workspace <= 0:
            raise ValueError("workspace must be positive")


def _random_pose(rng: np.random.Generator, span: float) -> Pose:
    position = rng.uniform(-span, span, size=3)
    quat = rng.normal(size=4)
    return Pose(position, quat / np.linalg.norm(quat))


def _jitter_pose(rng: np.random.Generator, base: Pose, sigma_pos: float, sigma_rot_deg: float) -> Pose:
    offset = rng.normal(scale=sigma_pos, size=3) if sigma_pos > 0 else np.zeros(3)
    if sigma_rot_deg > 0:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.normal(scale=sigma_rot_deg)
        wobble = Pose.from_axis_angle(axis, angle)
    else:
        wobble = Pose.identity()
    moved = compose(base, wobble)
    return Pose(moved.position + offset, moved.orientation)


def _object_ids(count: int) -> list:
    return [ObjectId(f"item{idx:02d}", "1") for idx in range(count)]


def generate_demonstration(spec: ScenarioSpec) -> DemonstrationDataset:
    """Deterministic synthetic demonstration per the scenario spec."""
    rng = np.random.default_rng(spec.seed)
    ids = _object_ids(spec.object_count)
    bases = {oid: _random_pose(rng, spec.workspace) for oid in ids}
    length = spec.trajectory_length

    trajectories = {}
    if spec.motion == "static":
        for oid in ids:
            trajectories[oid] = Trajectory(oid, tuple([bases[oid]] * length))
    elif spec.motion == "jitter":
        for oid in ids:
            poses = tuple(
                _jitter_pose(rng, bases[oid], spec.jitter_sigma, spec.jitter_rot_sigma_deg)
                for _ in range(length)
            )
            trajectories[oid] = Trajectory(oid, poses)
    else:  # rigid_groups
        groups = max(1, min(spec.group_count, spec.object_count))
        group_of = {oid: idx % groups for idx, oid in enumerate(ids)}
        # one rigid motion per group and timestep; members keep their offsets
        group_moves = {
            g: [
                Pose(
                    rng.uniform(-spec.workspace / 2, spec.workspace / 2, size=3),
                    np.array([1.0, 0.0, 0.0, 0.0]),
                )
                for _ in range(length)
            ]
            for g in range(groups)
        }
        for oid in ids:
            moves = group_moves[group_of[oid]]
            poses = tuple(compose(moves[t], bases[oid]) for t in range(length))
            trajectories[oid] = Trajectory(oid, poses)

    return DemonstrationDataset(f"synthetic_seed{spec.seed}", trajectories)


def make_moving_pair_dataset(
    length: int = 21,
    step: float = 0.05,
    pair_offset_steps: int = 4,
    category: str = "moving_pair",
) -> DemonstrationDataset:
    """A four-object scene built to separate star from complete topologies.

    Two objects ride together along x with a constant offset (their mutual
    relation is tight), while their positions relative to the static anchor
    and bystander sweep a wide range (those relations are loose).  The offset
    is an exact multiple of the sweep step, so swapping the pair lands both
    objects on demonstrated positions: a star centered on the anchor accepts
    the swap, while any topology containing the pair relation rejects it.
    """
    anchor = ObjectId("anchor", "1")
    bystander = ObjectId("bystander", "1")
    pair_a = ObjectId("pair_a", "1")
    pair_b = ObjectId("pair_b", "1")
    offset = pair_offset_steps * step
    half = (length - 1) * step / 2.0
    trajectories = {
        anchor: Trajectory(anchor, tuple([Pose.from_translation(0, 0, 0)] * length)),
        bystander: Trajectory(bystander, tuple([Pose.from_translation(0, 0.6, 0)] * length)),
        pair_a: Trajectory(
            pair_a,
            tuple(Pose.from_translation(-half + t * step, -0.4, 0) for t in range(length)),
        ),
        pair_b: Trajectory(
            pair_b,
            tuple(Pose.from_translation(-half + t * step + offset, -0.4, 0) for t in range(length)),
        ),
    }
    return DemonstrationDataset(category, trajectories)


@dataclass
class LabeledConfiguration:
    """One test configuration with its ground-truth validity label."""

    states: list
    valid: bool
    kind: str
    timestep: int


def _jittered_configuration(
    dataset: DemonstrationDataset,
    t: int,
    rng: np.random.Generator,
    sigma_pos: float,
    sigma_rot_deg: float,
) -> list:
    return [
        ObjectState(s.id, _jitter_pose(rng, s.pose, sigma_pos, sigma_rot_deg))
        for s in dataset.configuration_at(t)
    ]


def _swap_configuration(dataset: DemonstrationDataset, t: int, rng: np.random.Generator):
    states = dataset.configuration_at(t)
    i, j = rng.choice(len(states), size=2, replace=False)
    states[i], states[j] = (
        ObjectState(states[i].id, states[j].pose),
        ObjectState(states[j].id, states[i].pose),
    )
    # a swap of coincident poses changes nothing and stays a valid configuration
    degenerate = states[i].pose.approx_equal(states[j].pose)
    return states, degenerate


def _displace_configuration(
    dataset: DemonstrationDataset,
    t: int,
    rng: np.random.Generator,
    kind: str,
    magnitude: float,
) -> list:
    states = dataset.configuration_at(t)
    victim = int(rng.integers(len(states)))
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    old = states[victim]
    if kind == "shift":
        pose = Pose(old.pose.position + magnitude * axis, old.pose.orientation)
    else:
        pose = compose(old.pose, Pose.from_axis_angle(axis, magnitude))
    states[victim] = ObjectState(old.id, pose)
    return states


def generate_perturbed_test_set(
    dataset: DemonstrationDataset,
    kind: str,
    magnitude: float,
    count: int,
    seed: int = 0,
    valid_jitter_pos: float = 0.01,
    valid_jitter_rot_deg: float = 1.0,
) -> list:
    """Labeled valid/invalid configurations derived from a demonstration.

    kind "swap" exchanges two object poses, "shift"/"rotate" displace one
    object by the given magnitude (meters/degrees) and are labeled invalid by
    construction.  kind "mixed" emits exactly half valid configurations
    (demonstrated timesteps plus small jitter) and half invalid ones,
    alternating swaps and shifts.
    """
    if kind not in ("swap", "shift", "rotate", "mixed"):
        raise ValueError(f"unknown perturbation kind {kind!r}")
    if kind in ("shift", "rotate", "mixed") and magnitude <= 0:
        raise ValueError("shift/rotate/mixed need a positive magnitude")
    if count < 1:
        raise ValueError("count must be >= 1")

    rng = np.random.default_rng(seed)
    length = dataset.length
    configurations = []
    for i in range(count):
        t = int(rng.integers(length))
        if kind == "mixed":
            if i % 2 == 0:
                states = _jittered_configuration(
                    dataset, t, rng, valid_jitter_pos, valid_jitter_rot_deg
                )
                configurations.append(LabeledConfiguration(states, True, "jitter", t))
                continue
            sub_kind = "swap" if (i // 2) % 2 == 0 else "shift"
        else:
            sub_kind = kind
        if sub_kind == "swap":
            states, degenerate = _swap_configuration(dataset, t, rng)
            if degenerate and kind == "mixed":
                # keep the exact half/half split: replace the no-op swap
                states = _displace_configuration(dataset, t, rng, "shift", magnitude)
                configurations.append(LabeledConfiguration(states, False, "shift", t))
            else:
                configurations.append(LabeledConfiguration(states, degenerate, "swap", t))
        else:
            states = _displace_configuration(dataset, t, rng, sub_kind, magnitude)
            configurations.append(LabeledConfiguration(states, False, sub_kind, t))
    return configurations
