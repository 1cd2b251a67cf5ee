"""Object pose prediction: shortest ISM chains and sampled prediction clouds.

Prediction inverts recognition: starting from a recognized instance's pose,
it walks the shortest chain of ISMs down to a leaf of the searched object,
composing one randomly sampled inverted relative pose per hop.  Precomputing
the shortest chains keeps every prediction at minimal relation length, and
sampling one relative pose per relation (instead of all of them) keeps the
cost per predicted pose constant.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping

from .core import PLACEHOLDER_INSTANCE, ObjectId
from .errors import MissingVoteEntryError
from .geometry import Pose, compose
from .tree import IsmTree, SceneInstance


@dataclass(frozen=True)
class IsmPath:
    """Minimal chain of ISM labels from the root to a leaf of the target object."""

    target: ObjectId
    chain: tuple


@dataclass
class PredictionCloud:
    """Sampled pose hypotheses per missing object; duplicates are kept."""

    poses: dict

    def __len__(self) -> int:
        return len(self.poses)

    def __getitem__(self, object_id: ObjectId):
        return self.poses[object_id]

    def __iter__(self):
        return iter(self.poses)

    def items(self):
        return self.poses.items()


def compute_shortest_paths(tree: IsmTree) -> dict:
    """Shortest root-to-leaf ISM chain for every real object of the category.

    Traverses the tree breadth first from the root; an object represented at
    several depths keeps the shallowest chain, and ties at equal depth go to
    the lexicographically smallest ISM label (children are visited sorted).
    """
    placeholders = tree.placeholder_ids()
    children = {}
    for child, (parent, _) in tree.parent_link.items():
        children.setdefault(parent, []).append(child)

    paths = {}
    queue = deque([(tree.root_label, (tree.root_label,))])
    while queue:
        label, chain = queue.popleft()
        for oid in sorted(tree.isms[label].vote_table):
            if oid in placeholders:
                continue
            if oid not in paths:
                paths[oid] = IsmPath(target=oid, chain=chain)
        for child in sorted(children.get(label, ())):
            queue.append((child, chain + (child,)))
    return paths


def predict_pose(
    target: ObjectId,
    path: IsmPath,
    instance_pose: Pose,
    tree: IsmTree,
    rng,
) -> Pose:
    """One sampled pose hypothesis for the target object.

    Composes the instance pose with one uniformly sampled inverted relative
    pose per chain hop: placeholder hops between consecutive ISMs, then the
    target's own relation in the last ISM.
    """
    if path.target != target:
        raise ValueError(f"path targets {path.target}, not {target}")
    pose = instance_pose
    chain = path.chain
    for k, label in enumerate(chain):
        ism = tree.isms[label]
        if k + 1 < len(chain):
            hop = ObjectId(chain[k + 1], PLACEHOLDER_INSTANCE)
        else:
            hop = target
        samples = ism.vote_table.get(hop)
        if not samples:
            raise MissingVoteEntryError(f"ISM {label!r} has no vote entry for {hop}")
        index = int(rng.integers(len(samples)))
        pose = compose(pose, samples[index].back_to_object)
    return pose


def generate_cloud_of_pose_predictions(
    instance: SceneInstance,
    paths: Mapping[ObjectId, IsmPath],
    n_predictions: int,
    tree: IsmTree,
    rng,
) -> PredictionCloud:
    """Exactly n_predictions sampled poses per category object missing from the instance."""
    if n_predictions < 1:
        raise ValueError("n_predictions must be >= 1")
    present = instance.real_participants()
    cloud = {}
    for oid in sorted(paths):
        if oid in present:
            continue
        cloud[oid] = [
            predict_pose(oid, paths[oid], instance.pose, tree, rng)
            for _ in range(n_predictions)
        ]
    return PredictionCloud(cloud)
