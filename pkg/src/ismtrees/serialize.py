"""JSON file formats for models, datasets, configurations, and results.

All files carry an explicit version field "1".  Floats are serialized with
Python's shortest round-trip representation (at most 17 significant digits),
so save/load is bit-exact and repeated runs produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Iterable

import numpy as np

from .core import (
    DemonstrationDataset,
    ObjectId,
    ObjectState,
    RelativePoseSample,
    SingleIsm,
    Trajectory,
)
from .geometry import Pose
from .harness.asr import AsrLog, CameraModel, SimWorld, View
from .harness.datasets import ScenarioSpec
from .prediction import PredictionCloud
from .topology import RelationTopology
from .tree import IsmTree, SceneInstance

FORMAT_VERSION = "1"


class FileFormatError(ValueError):
    """A document is missing fields or has an unexpected kind/version."""


def _pose_to_list(pose: Pose) -> list:
    return [float(v) for v in pose.position] + [float(v) for v in pose.orientation]


def _pose_from_list(values) -> Pose:
    if len(values) != 7:
        raise FileFormatError(f"pose needs 7 numbers, got {len(values)}")
    return Pose(np.array(values[:3], dtype=float), np.array(values[3:], dtype=float))


def _object_id_to_dict(oid: ObjectId) -> dict:
    return {"class": oid.class_label, "instance": oid.instance_label}


def _object_id_from_dict(doc: dict) -> ObjectId:
    return ObjectId(doc["class"], doc["instance"])


def _check_header(doc: dict, kind: str) -> None:
    if doc.get("version") != FORMAT_VERSION:
        raise FileFormatError(f"unsupported version {doc.get('version')!r}")
    if doc.get("kind") != kind:
        raise FileFormatError(f"expected kind {kind!r}, got {doc.get('kind')!r}")


def _write(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=1, sort_keys=True)
        handle.write("\n")


def _read(path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


# -- demonstrations ----------------------------------------------------------


def dataset_to_doc(dataset: DemonstrationDataset) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": "demonstration",
        "category": dataset.category_label,
        "trajectories": [
            {
                **_object_id_to_dict(oid),
                "poses": [_pose_to_list(p) for p in traj.poses],
            }
            for oid, traj in sorted(dataset.trajectories.items())
        ],
    }


def dataset_from_doc(doc: dict) -> DemonstrationDataset:
    _check_header(doc, "demonstration")
    trajectories = {}
    for entry in doc["trajectories"]:
        oid = _object_id_from_dict(entry)
        trajectories[oid] = Trajectory(oid, tuple(_pose_from_list(p) for p in entry["poses"]))
    return DemonstrationDataset(doc["category"], trajectories)


def save_dataset(path, dataset: DemonstrationDataset) -> None:
    _write(path, dataset_to_doc(dataset))


def load_dataset(path) -> DemonstrationDataset:
    return dataset_from_doc(_read(path))


# -- configurations ----------------------------------------------------------


def configuration_to_doc(states: Iterable[ObjectState]) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": "configuration",
        "objects": [
            {
                **_object_id_to_dict(s.id),
                "pose": _pose_to_list(s.pose),
                "confidence": s.confidence,
            }
            for s in states
        ],
    }


def configuration_from_doc(doc: dict) -> list:
    _check_header(doc, "configuration")
    return [
        ObjectState(
            _object_id_from_dict(entry),
            _pose_from_list(entry["pose"]),
            confidence=entry.get("confidence", 1.0),
        )
        for entry in doc["objects"]
    ]


def save_configuration(path, states: Iterable[ObjectState]) -> None:
    _write(path, configuration_to_doc(states))


def load_configuration(path) -> list:
    return configuration_from_doc(_read(path))


# -- single ISMs and trees ---------------------------------------------------


def single_ism_to_doc(ism: SingleIsm) -> dict:
    votes = []
    for oid in sorted(ism.vote_table):
        for sample in ism.vote_table[oid]:
            votes.append(
                {
                    "object": _object_id_to_dict(oid),
                    "timestep": sample.timestep,
                    "voteToReference": _pose_to_list(sample.vote_to_reference),
                    "backToObject": _pose_to_list(sample.back_to_object),
                }
            )
    return {
        "label": ism.label,
        "reference": _object_id_to_dict(ism.reference_id),
        "votes": votes,
        "weights": [
            {"object": _object_id_to_dict(oid), "weight": weight}
            for oid, weight in sorted(ism.weight_table.items())
        ],
    }


def single_ism_from_doc(doc: dict) -> SingleIsm:
    vote_table = {}
    for vote in doc["votes"]:
        oid = _object_id_from_dict(vote["object"])
        vote_table.setdefault(oid, []).append(
            RelativePoseSample(
                timestep=vote["timestep"],
                vote_to_reference=_pose_from_list(vote["voteToReference"]),
                back_to_object=_pose_from_list(vote["backToObject"]),
            )
        )
    weight_table = {
        _object_id_from_dict(w["object"]): int(w["weight"]) for w in doc["weights"]
    }
    return SingleIsm(
        label=doc["label"],
        reference_id=_object_id_from_dict(doc["reference"]),
        vote_table={oid: tuple(sorted(samples, key=lambda s: s.timestep)) for oid, samples in vote_table.items()},
        weight_table=weight_table,
    )


def tree_to_doc(tree: IsmTree) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": "tree",
        "category": tree.category_label,
        "root": tree.root_label,
        "isms": [single_ism_to_doc(tree.isms[lbl]) for lbl in sorted(tree.isms)],
        "parentLink": [
            {
                "child": child,
                "parent": parent,
                "placeholder": _object_id_to_dict(placeholder),
            }
            for child, (parent, placeholder) in sorted(tree.parent_link.items())
        ],
        "levels": {label: level for label, level in sorted(tree.levels.items())},
    }


def tree_from_doc(doc: dict) -> IsmTree:
    _check_header(doc, "tree")
    isms = {}
    for ism_doc in doc["isms"]:
        ism = single_ism_from_doc(ism_doc)
        isms[ism.label] = ism
    parent_link = {
        link["child"]: (link["parent"], _object_id_from_dict(link["placeholder"]))
        for link in doc["parentLink"]
    }
    return IsmTree(
        category_label=doc["category"],
        isms=isms,
        root_label=doc["root"],
        parent_link=parent_link,
        levels={label: int(level) for label, level in doc["levels"].items()},
    )


def save_tree(path, tree: IsmTree) -> None:
    _write(path, tree_to_doc(tree))


def load_tree(path) -> IsmTree:
    return tree_from_doc(_read(path))


# -- topologies --------------------------------------------------------------


def topology_to_doc(topology: RelationTopology) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": "topology",
        "objects": [_object_id_to_dict(o) for o in sorted(topology.objects)],
        "relations": [
            [_object_id_to_dict(a), _object_id_to_dict(b)]
            for a, b in sorted(topology.relations)
        ],
    }


def topology_from_doc(doc: dict) -> RelationTopology:
    _check_header(doc, "topology")
    return RelationTopology(
        [_object_id_from_dict(o) for o in doc["objects"]],
        [
            (_object_id_from_dict(a), _object_id_from_dict(b))
            for a, b in doc["relations"]
        ],
    )


def save_topology(path, topology: RelationTopology) -> None:
    _write(path, topology_to_doc(topology))


def load_topology(path) -> RelationTopology:
    return topology_from_doc(_read(path))


# -- prediction clouds -------------------------------------------------------


def cloud_to_doc(cloud: PredictionCloud) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": "prediction_cloud",
        "predictions": [
            {
                **_object_id_to_dict(oid),
                "poses": [_pose_to_list(p) for p in poses],
            }
            for oid, poses in sorted(cloud.items())
        ],
    }


def cloud_from_doc(doc: dict) -> PredictionCloud:
    _check_header(doc, "prediction_cloud")
    return PredictionCloud(
        {
            _object_id_from_dict(entry): [_pose_from_list(p) for p in entry["poses"]]
            for entry in doc["predictions"]
        }
    )


def save_cloud(path, cloud: PredictionCloud) -> None:
    _write(path, cloud_to_doc(cloud))


def load_cloud(path) -> PredictionCloud:
    return cloud_from_doc(_read(path))


# -- recognition reports -----------------------------------------------------


def instances_to_report_doc(instances: Iterable[SceneInstance], category: str) -> dict:
    report_instances = []
    for instance in instances:
        results = []
        for result in instance.all_results():
            results.append(
                {
                    "ism": result.ism_label,
                    "objective": result.objective_value,
                    "confidence": result.confidence,
                    "totalWeight": result.total_weight,
                    "pose": _pose_to_list(result.reference_pose),
                    "token": result.token,
                    "participants": [
                        {
                            **_object_id_to_dict(p.state.id),
                            "placeholder": p.state.is_placeholder,
                            "token": p.state.token,
                            "similarity": p.contribution,
                            "position": p.position_compliance,
                            "orientation": p.orientation_compliance,
                            "weight": p.weight,
                        }
                        for p in result.participants
                    ],
                }
            )
        report_instances.append(
            {
                "confidence": instance.confidence,
                "pose": _pose_to_list(instance.pose),
                "objective": instance.root_result.objective_value,
                "results": results,
            }
        )
    return {
        "version": FORMAT_VERSION,
        "kind": "recognition_report",
        "category": category,
        "instances": report_instances,
    }


def save_report(path, instances: Iterable[SceneInstance], category: str) -> None:
    _write(path, instances_to_report_doc(instances, category))


def load_report(path) -> dict:
    doc = _read(path)
    _check_header(doc, "recognition_report")
    return doc


# -- scenarios and worlds ----------------------------------------------------


def scenario_from_doc(doc: dict) -> ScenarioSpec:
    _check_header(doc, "scenario")
    fields = {k: v for k, v in doc.items() if k not in ("version", "kind")}
    return ScenarioSpec(**fields)


def scenario_to_doc(spec: ScenarioSpec) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": "scenario",
        "object_count": spec.object_count,
        "trajectory_length": spec.trajectory_length,
        "motion": spec.motion,
        "jitter_sigma": spec.jitter_sigma,
        "jitter_rot_sigma_deg": spec.jitter_rot_sigma_deg,
        "workspace": spec.workspace,
        "group_count": spec.group_count,
        "seed": spec.seed,
    }


def load_scenario(path) -> ScenarioSpec:
    return scenario_from_doc(_read(path))


def save_scenario(path, spec: ScenarioSpec) -> None:
    _write(path, scenario_to_doc(spec))


def world_to_doc(world: SimWorld) -> dict:
    return {
        "version": FORMAT_VERSION,
        "kind": "world",
        "objects": [
            {**_object_id_to_dict(s.id), "pose": _pose_to_list(s.pose)}
            for s in world.true_states
        ],
        "clutter": [
            {**_object_id_to_dict(s.id), "pose": _pose_to_list(s.pose)}
            for s in world.clutter
        ],
        "robot": [world.robot.x, world.robot.y, world.robot.yaw_deg],
        "camera": {
            "fov_deg": world.camera.fov_deg,
            "min_range": world.camera.min_range,
            "max_range": world.camera.max_range,
        },
        "noise": {"pos": world.noise_pos, "rot_deg": world.noise_rot_deg},
        "bounds": [list(world.bounds[0]), list(world.bounds[1])],
    }


def world_from_doc(doc: dict) -> SimWorld:
    _check_header(doc, "world")

    def states(entries):
        return [
            ObjectState(_object_id_from_dict(e), _pose_from_list(e["pose"]))
            for e in entries
        ]

    camera = doc.get("camera", {})
    noise = doc.get("noise", {})
    bounds = doc.get("bounds", [[-2.0, 8.0], [-3.0, 3.0]])
    return SimWorld(
        true_states=states(doc["objects"]),
        robot=View(*doc["robot"]),
        camera=CameraModel(
            fov_deg=camera.get("fov_deg", 90.0),
            min_range=camera.get("min_range", 0.1),
            max_range=camera.get("max_range", 3.0),
        ),
        noise_pos=noise.get("pos", 0.005),
        noise_rot_deg=noise.get("rot_deg", 1.0),
        clutter=states(doc.get("clutter", [])),
        bounds=(tuple(bounds[0]), tuple(bounds[1])),
    )


def load_world(path) -> SimWorld:
    return world_from_doc(_read(path))


def save_world(path, world: SimWorld) -> None:
    _write(path, world_to_doc(world))


def asr_log_to_lines(log: AsrLog) -> list:
    lines = []
    for entry in log.entries:
        lines.append(
            json.dumps(
                {
                    "state": entry.state,
                    "view": [entry.view.x, entry.view.y, entry.view.yaw_deg]
                    if entry.view
                    else None,
                    "detected": [str(oid) for oid in entry.newly_detected],
                    "cost": entry.cost,
                },
                sort_keys=True,
            )
        )
    lines.append(
        json.dumps(
            {
                "summary": {
                    "adopted_views": log.adopted_views,
                    "found": sorted(str(oid) for oid in log.found_ids),
                    "instances": {
                        label: instance.confidence
                        for label, instance in sorted(log.final_instances.items())
                    },
                }
            },
            sort_keys=True,
        )
    )
    return lines


def save_asr_log(path, log: AsrLog) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for line in asr_log_to_lines(log):
            handle.write(line + "\n")


def load_asr_log_lines(path) -> list:
    with open(path, "r", encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]
