"""Simplified active-search simulation on a planar robot with a pivoting camera.

The simulation alternates two search modes.  DIRECT_SEARCH adopts informed
views (aimed at clusters of demonstrated object positions) and falls back to
an uninformed sweep grid.  Once anything is detected, INDIRECT_SEARCH loops
through scene recognition, object pose prediction, and relation-based view
selection: candidate views are scored by the confidence-weighted predicted
poses they would capture minus a travel penalty, and the best is adopted.
Visibility is a pure frustum test (bearing plus range against the true
position); there is no occlusion or physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..core import ObjectState, RecognitionParams
from ..geometry import Pose, compose
from ..prediction import compute_shortest_paths, generate_cloud_of_pose_predictions
from ..tree import IsmTree, recognize_scene

DIRECT_SEARCH = "DIRECT_SEARCH"
SCENE_RECOGNITION = "SCENE_RECOGNITION"
OBJECT_POSE_PREDICTION = "OBJECT_POSE_PREDICTION"
RELATION_BASED_SEARCH = "RELATION_BASED_SEARCH"


@dataclass(frozen=True)
class View:
    """A camera placement: planar position plus yaw heading in degrees."""

    x: float
    y: float
    yaw_deg: float


@dataclass
class CameraModel:
    fov_deg: float = 90.0
    min_range: float = 0.1
    max_range: float = 3.0

    def __post_init__(self) -> None:
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError("field of view must be in (0, 180) degrees")
        if self.min_range <= 0 or self.max_range <= self.min_range:
            raise ValueError("camera ranges must satisfy 0 < min < max")


@dataclass
class SimWorld:
    """Ground truth for one simulated search run."""

    true_states: list
    robot: View
    camera: CameraModel = field(default_factory=CameraModel)
    noise_pos: float = 0.005
    noise_rot_deg: float = 1.0
    clutter: list = field(default_factory=list)
    bounds: tuple = ((-2.0, 8.0), (-3.0, 3.0))


@dataclass
class AsrParams:
    recognition: RecognitionParams = field(
        default_factory=lambda: RecognitionParams(result_keep_threshold=0.05, eps_r=0.1)
    )
    mode: str = "full"  # full | sweep_only | bbox
    n_predictions: int = 50
    lambda_travel: float = 0.02
    turn_cost: float = 0.2
    no_progress_limit: int = 3
    sweep_step: float = 1.5
    sweep_headings: int = 4
    view_distance: float = 1.5
    informed_positions: list = field(default_factory=list)
    bounding_boxes: list = field(default_factory=list)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("full", "sweep_only", "bbox"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.no_progress_limit < 1:
            raise ValueError("no_progress_limit must be >= 1")


@dataclass
class AsrLogEntry:
    state: str
    view: Optional[View]
    newly_detected: list
    cost: float


@dataclass
class AsrLog:
    entries: list
    final_instances: dict
    found_ids: set

    @property
    def adopted_views(self) -> int:
        return sum(1 for e in self.entries if e.view is not None)


def _wrap_deg(angle: float) -> float:
    return (angle + 180.0) % 360.0 - 180.0


def visible(view: View, camera: CameraModel, position) -> bool:
    dx = float(position[0]) - view.x
    dy = float(position[1]) - view.y
    dist = math.hypot(dx, dy)
    if not camera.min_range <= dist <= camera.max_range:
        return False
    bearing = math.degrees(math.atan2(dy, dx))
    return abs(_wrap_deg(bearing - view.yaw_deg)) <= camera.fov_deg / 2.0


def _travel_cost(a: View, b: View, turn_cost: float) -> float:
    return math.hypot(a.x - b.x, a.y - b.y) + turn_cost * abs(
        math.radians(_wrap_deg(a.yaw_deg - b.yaw_deg))
    )


def _noisy_detection(state: ObjectState, world: SimWorld, rng: np.random.Generator) -> ObjectState:
    offset = rng.normal(scale=world.noise_pos, size=3) if world.noise_pos > 0 else np.zeros(3)
    if world.noise_rot_deg > 0:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        wobble = Pose.from_axis_angle(axis, rng.normal(scale=world.noise_rot_deg))
        pose = compose(state.pose, wobble)
    else:
        pose = state.pose
    return ObjectState(state.id, Pose(pose.position + offset, pose.orientation))


def _cluster_positions(positions: Sequence, cell: float = 2.0) -> list:
    clusters = {}
    for pos in positions:
        key = (round(float(pos[0]) / cell), round(float(pos[1]) / cell))
        clusters.setdefault(key, []).append(np.asarray(pos, float))
    return [np.mean(group, axis=0) for key, group in sorted(clusters.items())]


def _view_at(target, distance: float, heading_deg: float) -> View:
    rad = math.radians(heading_deg)
    return View(
        float(target[0]) - distance * math.cos(rad),
        float(target[1]) - distance * math.sin(rad),
        heading_deg,
    )


def _informed_views(params: AsrParams, start: View) -> list:
    views = []
    for center in _cluster_positions(params.informed_positions):
        heading = math.degrees(math.atan2(center[1] - start.y, center[0] - start.x))
        views.append(_view_at(center, params.view_distance, heading))
    views.sort(key=lambda v: _travel_cost(start, v, params.turn_cost))
    return views


def _sweep_views(world: SimWorld, params: AsrParams) -> list:
    (x0, x1), (y0, y1) = world.bounds
    xs = np.arange(x0, x1 + 1e-9, params.sweep_step)
    ys = np.arange(y0, y1 + 1e-9, params.sweep_step)
    headings = [i * 360.0 / params.sweep_headings for i in range(params.sweep_headings)]
    return [View(float(x), float(y), h) for x in xs for y in ys for h in headings]


def _candidate_views(points: Sequence, params: AsrParams) -> list:
    views = []
    for center in _cluster_positions(points, cell=1.0):
        for k in range(8):
            views.append(_view_at(center, params.view_distance, k * 45.0))
    return views


def _box_points(box, step: float = 0.5) -> list:
    (x0, x1), (y0, y1), (z0, z1) = box
    zs = [0.5 * (z0 + z1)]
    return [
        np.array([x, y, z])
        for x in np.arange(x0, x1 + 1e-9, step)
        for y in np.arange(y0, y1 + 1e-9, step)
        for z in zs
    ]


class _Simulation:
    def __init__(self, world: SimWorld, trees: Sequence[IsmTree], params: AsrParams):
        if not trees:
            raise ValueError("simulation needs at least one scene tree")
        self.world = world
        self.trees = list(trees)
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.robot = world.robot
        self.detected = {}
        self.adopted = set()
        self.log = []
        category = set()
        for tree in self.trees:
            category.update(tree.real_leaf_objects())
        self.searchable = {s.id for s in world.true_states if s.id in category}
        self.paths = {tree.category_label: compute_shortest_paths(tree) for tree in self.trees}

    def all_found(self) -> bool:
        return self.searchable <= set(self.detected)

    def adopt(self, state_name: str, view: View) -> list:
        cost = _travel_cost(self.robot, view, self.params.turn_cost)
        self.robot = view
        self.adopted.add(view)
        new = []
        for obj in list(self.world.true_states) + list(self.world.clutter):
            if obj.id in self.detected:
                continue
            if visible(view, self.world.camera, obj.pose.position):
                self.detected[obj.id] = _noisy_detection(obj, self.world, self.rng)
                new.append(obj.id)
        self.log.append(AsrLogEntry(state_name, view, sorted(new, key=str), cost))
        return new

    def recognize_all(self) -> dict:
        estimates = list(self.detected.values())
        out = {}
        for tree in self.trees:
            instances = recognize_scene(estimates, tree, self.params.recognition)
            if instances:
                out[tree.category_label] = instances[0]
        return out

    def run(self) -> AsrLog:
        params = self.params
        sweep = _sweep_views(self.world, params)
        direct_queue = (
            list(sweep)
            if params.mode == "sweep_only"
            else _informed_views(params, self.robot) + list(sweep)
        )
        budget = len(direct_queue) + params.no_progress_limit * (len(self.searchable) + 1)

        if params.mode == "bbox":
            self._run_nbv_over_points(
                [p for box in params.bounding_boxes for p in _box_points(box)], budget
            )
        else:
            direct_index = 0
            while direct_index < len(direct_queue) and not self.all_found():
                new = self.adopt(DIRECT_SEARCH, direct_queue[direct_index])
                direct_index += 1
                if new and params.mode == "full":
                    break
            if params.mode == "sweep_only":
                pass
            elif not self.all_found():
                self._indirect_loop(direct_queue[direct_index:], budget)

        instances = self.recognize_all()
        self.log.append(AsrLogEntry(SCENE_RECOGNITION, None, [], 0.0))
        return AsrLog(self.log, instances, set(self.detected) & self.searchable)

    def _indirect_loop(self, remaining_direct: list, budget: int) -> None:
        params = self.params
        no_progress = 0
        fallback = list(remaining_direct)
        while (
            not self.all_found()
            and no_progress < params.no_progress_limit
            and sum(1 for e in self.log if e.view is not None) < budget
        ):
            instances = self.recognize_all()
            self.log.append(AsrLogEntry(SCENE_RECOGNITION, None, [], 0.0))

            points, weights = [], []
            for label, instance in instances.items():
                tree = next(t for t in self.trees if t.category_label == label)
                cloud = generate_cloud_of_pose_predictions(
                    instance, self.paths[label], params.n_predictions, tree, self.rng
                )
                for _, poses in cloud.items():
                    for pose in poses:
                        points.append(pose.position)
                        weights.append(instance.confidence)
            self.log.append(AsrLogEntry(OBJECT_POSE_PREDICTION, None, [], 0.0))

            if points:
                view = self._best_view(_candidate_views(points, params), points, weights)
                new = self.adopt(RELATION_BASED_SEARCH, view)
            elif fallback:
                new = self.adopt(DIRECT_SEARCH, fallback.pop(0))
            else:
                break
            no_progress = 0 if new else no_progress + 1

    def _run_nbv_over_points(self, points: list, budget: int) -> None:
        params = self.params
        weights = [1.0] * len(points)
        no_progress = 0
        while (
            points
            and not self.all_found()
            and no_progress < params.no_progress_limit
            and sum(1 for e in self.log if e.view is not None) < budget
        ):
            view = self._best_view(_candidate_views(points, params), points, weights)
            new = self.adopt(RELATION_BASED_SEARCH, view)
            no_progress = 0 if new else no_progress + 1

    def _best_view(self, candidates: list, points: list, weights: list) -> View:
        best_view, best_utility = None, -math.inf
        for view in candidates:
            if view in self.adopted:
                continue
            gain = sum(
                w
                for p, w in zip(points, weights)
                if visible(view, self.world.camera, p)
            )
            utility = gain - self.params.lambda_travel * _travel_cost(
                self.robot, view, self.params.turn_cost
            )
            if utility > best_utility:
                best_view, best_utility = view, utility
        if best_view is None:
            best_view = self.robot
        return best_view


def run_asr_simulation(world: SimWorld, trees: Sequence[IsmTree], params: AsrParams) -> AsrLog:
    """Run the state machine to completion; always terminates via the view budget."""
    return _Simulation(world, trees, params).run()
