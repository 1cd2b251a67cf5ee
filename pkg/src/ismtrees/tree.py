"""Hierarchical scene models: generation from star partitions and recognition.

A tree links several single ISMs through placeholder reference objects: a
child model's recognition results re-enter its parent as synthetic object
states, so the root merges evidence from every portion of the scene
category.  Trees are immutable after generation; recognition is read-only
and stateless per call.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import (
    PLACEHOLDER_INSTANCE,
    DemonstrationDataset,
    ObjectId,
    ObjectState,
    RecognitionParams,
    RecognitionResult,
    Trajectory,
    learn_single_ism,
    recognize_single_ism,
)
from .errors import NoAttachmentPointError
from .geometry import Pose
from .topology import StarTopology


@dataclass
class IsmTree:
    """A height-minimized hierarchy of single ISMs covering one scene category."""

    category_label: str
    isms: dict
    root_label: str
    parent_link: dict
    levels: dict

    @property
    def height(self) -> int:
        return max(self.levels.values())

    def labels_by_level(self, descending: bool = True) -> list:
        return sorted(self.isms, key=lambda lbl: (-self.levels[lbl] if descending else self.levels[lbl], lbl))

    def placeholder_ids(self) -> set:
        return {
            ObjectId(label, PLACEHOLDER_INSTANCE)
            for label in self.isms
            if label != self.root_label
        }

    def real_leaf_objects(self) -> set:
        placeholders = self.placeholder_ids()
        leaves = set()
        for ism in self.isms.values():
            leaves.update(oid for oid in ism.vote_table if oid not in placeholders)
        return leaves

    @property
    def total_weight(self) -> int:
        return self.isms[self.root_label].total_weight


@dataclass(eq=False)
class SceneInstance:
    """One recognized occurrence of a scene category in a configuration."""

    category_label: str
    root_result: RecognitionResult
    sub_results: tuple
    pose: Pose
    confidence: float

    def all_results(self) -> tuple:
        return (self.root_result,) + self.sub_results

    def real_participants(self) -> set:
        """ObjectIds of directly detected objects across every contributing result."""
        ids = set()
        for result in self.all_results():
            for p in result.participants:
                if not p.state.is_placeholder:
                    ids.add(p.state.id)
        return ids


def _hook_candidates(star: StarTopology, heights) -> list:
    """Objects through which a new ISM may attach, best first.

    Preference order: minimal height, the star's own center before its
    neighbors, then lexicographic.  Later entries are fallbacks for the rare
    case that the preferred shared object was already substituted everywhere.
    """
    members = [o for o in star.members if o in heights]
    return sorted(members, key=lambda o: (heights[o], o != star.center, o))


def generate_ism_tree(
    category_label: str,
    stars: Sequence[StarTopology],
    heights: Mapping[ObjectId, int],
    dataset: DemonstrationDataset,
) -> IsmTree:
    """Generate a scene-category tree from a star partition.

    Stars are converted to ISMs in descending center height (ties resolved
    in reverse extraction order), so portions that belong near the root are
    attached as late and as high as possible, minimizing tree height.  Each
    new ISM is hooked into the lowest remaining star that shares its hook
    object; the shared object is replaced by the new model's placeholder
    reference object and the placeholder trajectory (the sub-model's center
    trajectory) becomes learnable input for the parent.
    """
    if not stars:
        raise ValueError("cannot generate a tree from zero stars")
    for star in stars:
        for member in star.members:
            if member not in dataset.trajectories:
                raise KeyError(f"star member {member} has no trajectory in the dataset")

    order = sorted(
        range(len(stars)),
        key=lambda j: (-heights.get(stars[j].center, 0), -j),
    )
    trajectories = dict(dataset.trajectories)
    weights = {oid: 1 for oid in trajectories}
    centers = {j: stars[j].center for j in range(len(stars))}
    neighborhoods = {j: list(stars[j].neighborhood) for j in range(len(stars))}
    remaining = set(order)

    isms = {}
    label_of_star = {}
    parent_star_of = {}
    sub_index = len(stars) - 2
    for j in order:
        remaining.discard(j)
        if not remaining:
            label = category_label
        else:
            label = f"{category_label}_sub{sub_index}"
            sub_index -= 1
        center_traj = trajectories[centers[j]]
        neighbor_trajs = [trajectories[o] for o in neighborhoods[j]]
        ism, reference_traj = learn_single_ism(label, center_traj, neighbor_trajs, weights)
        isms[label] = ism
        label_of_star[j] = label
        if not remaining:
            break

        placeholder = ism.reference_id
        attached = False
        search_order = sorted(remaining, key=lambda k: (heights.get(centers[k], 0), k))
        for hook in _hook_candidates(stars[j], heights):
            for k in search_order:
                if hook in neighborhoods[k]:
                    neighborhoods[k][neighborhoods[k].index(hook)] = placeholder
                    attached = True
                elif hook == centers[k]:
                    centers[k] = placeholder
                    attached = True
                if attached:
                    parent_star_of[label] = k
                    trajectories[placeholder] = Trajectory(placeholder, reference_traj.poses)
                    weights[placeholder] = ism.total_weight
                    break
            if attached:
                break
        if not attached:
            raise NoAttachmentPointError(
                f"star centered at {stars[j].center} shares no object with the remaining stars"
            )

    root_label = label_of_star[order[-1]]
    parent_link = {}
    for child_label, k in parent_star_of.items():
        parent_label = label_of_star[k]
        parent_link[child_label] = (parent_label, ObjectId(child_label, PLACEHOLDER_INSTANCE))

    levels = {root_label: 0}
    pending = [lbl for lbl in isms if lbl != root_label]
    while pending:
        progressed = False
        for lbl in list(pending):
            parent_label = parent_link[lbl][0]
            if parent_label in levels:
                levels[lbl] = levels[parent_label] + 1
                pending.remove(lbl)
                progressed = True
        if not progressed:
            raise NoAttachmentPointError("parent links do not form a rooted tree")

    return IsmTree(
        category_label=category_label,
        isms=isms,
        root_label=root_label,
        parent_link=parent_link,
        levels=levels,
    )


def learn_tree_from_topology(dataset: DemonstrationDataset, topology) -> IsmTree:
    """Partition a connected relation topology and generate the category tree."""
    from .topology import partition_into_stars

    stars, heights = partition_into_stars(topology)
    return generate_ism_tree(dataset.category_label, stars, heights, dataset)


def evaluate_isms_in_tree(
    inputs: Iterable[ObjectState],
    tree: IsmTree,
    params: RecognitionParams,
) -> list:
    """Evaluate every ISM exactly once, from the deepest level up to the root.

    After each non-root evaluation, results at or above the keep threshold
    (capped best-first) are converted into placeholder object states and fed
    into the shared input pool for the levels above.  Returns all stored
    results of every ISM.
    """
    token_counter = itertools.count()
    pool = list(inputs)
    all_results = []
    for label in tree.labels_by_level(descending=True):
        ism = tree.isms[label]
        results = recognize_single_ism(pool, ism, params, token_counter)
        all_results.extend(results)
        if label == tree.root_label:
            continue
        kept = [r for r in results if r.confidence >= params.result_keep_threshold]
        for result in kept[: params.max_results_per_ism]:
            pool.append(
                ObjectState(
                    id=ism.reference_id,
                    pose=result.reference_pose,
                    is_placeholder=True,
                    confidence=result.confidence,
                    token=result.token,
                )
            )
    return all_results


def assemble_instances(
    all_results: Sequence[RecognitionResult],
    tree: IsmTree,
    eps_r: float,
) -> list:
    """Assemble scene instances from stored recognition results.

    One instance per root result whose confidence reaches eps_r; the sub
    results belonging to an instance are collected recursively by matching
    each placeholder participant's token against the result it came from.
    """
    by_token = {r.token: r for r in all_results}
    instances = []
    for result in all_results:
        if result.ism_label != tree.root_label or result.confidence < eps_r:
            continue
        subs = []
        stack = [result]
        while stack:
            current = stack.pop(0)
            for p in current.participants:
                if p.state.is_placeholder and p.state.token in by_token:
                    sub = by_token[p.state.token]
                    subs.append(sub)
                    stack.append(sub)
        instances.append(
            SceneInstance(
                category_label=tree.category_label,
                root_result=result,
                sub_results=tuple(subs),
                pose=result.reference_pose,
                confidence=result.confidence,
            )
        )
    instances.sort(key=lambda i: -i.confidence)
    return instances


def recognize_scene(
    inputs: Iterable[ObjectState],
    tree: IsmTree,
    params: RecognitionParams,
) -> list:
    """Full scene recognition: level-ordered evaluation, then instance assembly."""
    all_results = evaluate_isms_in_tree(inputs, tree, params)
    return assemble_instances(all_results, tree, params.eps_r)
