from __future__ import annotations

import numpy as np
import pytest

from ismtrees import serialize
from ismtrees.core import ObjectId, ObjectState, RecognitionParams
from ismtrees.geometry import Pose
from ismtrees.harness.asr import CameraModel, SimWorld, View
from ismtrees.harness.datasets import ScenarioSpec, generate_demonstration
from ismtrees.prediction import PredictionCloud
from ismtrees.topology import complete_topology, star_topology
from ismtrees.tree import learn_tree_from_topology, recognize_scene


@pytest.fixture
def dataset():
    return generate_demonstration(
        ScenarioSpec(object_count=3, trajectory_length=4, motion="jitter", seed=21)
    )


def test_dataset_round_trip_is_bit_exact(tmp_path, dataset):
    path = tmp_path / "demo.json"
    serialize.save_dataset(path, dataset)
    loaded = serialize.load_dataset(path)
    assert loaded.category_label == dataset.category_label
    for oid in dataset.object_ids():
        for a, b in zip(dataset.trajectories[oid].poses, loaded.trajectories[oid].poses):
            assert np.array_equal(a.position, b.position)
            assert np.array_equal(a.orientation, b.orientation)


def test_dataset_files_are_byte_identical(tmp_path, dataset):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    serialize.save_dataset(first, dataset)
    serialize.save_dataset(second, dataset)
    assert first.read_bytes() == second.read_bytes()


def test_tree_round_trip_preserves_recognition(tmp_path, dataset):
    tree = learn_tree_from_topology(dataset, complete_topology(dataset.object_ids()))
    path = tmp_path / "tree.json"
    serialize.save_tree(path, tree)
    loaded = serialize.load_tree(path)
    assert loaded.root_label == tree.root_label
    assert loaded.levels == tree.levels
    assert loaded.parent_link == tree.parent_link
    params = RecognitionParams()
    config = dataset.configuration_at(1)
    before = recognize_scene(config, tree, params)
    after = recognize_scene(config, loaded, params)
    assert len(before) == len(after)
    for a, b in zip(before, after):
        assert a.confidence == b.confidence
        assert a.root_result.objective_value == b.root_result.objective_value
        assert np.array_equal(a.pose.position, b.pose.position)


def test_configuration_round_trip(tmp_path, dataset):
    path = tmp_path / "config.json"
    states = dataset.configuration_at(0)
    serialize.save_configuration(path, states)
    loaded = serialize.load_configuration(path)
    assert len(loaded) == len(states)
    for a, b in zip(states, loaded):
        assert a.id == b.id
        assert np.array_equal(a.pose.position, b.pose.position)


def test_topology_round_trip(tmp_path, dataset):
    topology = star_topology(dataset.object_ids())
    path = tmp_path / "topo.json"
    serialize.save_topology(path, topology)
    loaded = serialize.load_topology(path)
    assert loaded.objects == topology.objects
    assert loaded.relations == topology.relations


def test_cloud_round_trip(tmp_path):
    oid = ObjectId("cup", "1")
    cloud = PredictionCloud({oid: [Pose.from_translation(0.1, 0.2, 0.3)]})
    path = tmp_path / "cloud.json"
    serialize.save_cloud(path, cloud)
    loaded = serialize.load_cloud(path)
    assert set(loaded) == {oid}
    assert loaded[oid][0].approx_equal(cloud[oid][0], atol=0.0)


def test_world_round_trip(tmp_path):
    world = SimWorld(
        true_states=[ObjectState(ObjectId("cup", "1"), Pose.from_translation(1, 2, 0))],
        robot=View(0.0, -1.0, 45.0),
        camera=CameraModel(fov_deg=80.0, min_range=0.3, max_range=2.5),
        clutter=[ObjectState(ObjectId("junk", "1"), Pose.from_translation(0, 0, 0))],
        bounds=((-1.0, 3.0), (-2.0, 2.0)),
    )
    path = tmp_path / "world.json"
    serialize.save_world(path, world)
    loaded = serialize.load_world(path)
    assert loaded.robot == world.robot
    assert loaded.camera.fov_deg == 80.0
    assert loaded.bounds == world.bounds
    assert loaded.true_states[0].id == world.true_states[0].id


def test_report_contains_compliance_columns(tmp_path, dataset):
    tree = learn_tree_from_topology(dataset, star_topology(dataset.object_ids()))
    instances = recognize_scene(dataset.configuration_at(0), tree, RecognitionParams())
    path = tmp_path / "report.json"
    serialize.save_report(path, instances, tree.category_label)
    doc = serialize.load_report(path)
    participant = doc["instances"][0]["results"][0]["participants"][0]
    assert {"similarity", "position", "orientation", "weight"} <= set(participant)
    assert doc["instances"][0]["confidence"] == pytest.approx(1.0, abs=1e-9)


def test_version_guard(tmp_path, dataset):
    path = tmp_path / "demo.json"
    serialize.save_dataset(path, dataset)
    doc = path.read_text().replace('"version": "1"', '"version": "99"')
    path.write_text(doc)
    with pytest.raises(serialize.FileFormatError):
        serialize.load_dataset(path)


def test_kind_guard(tmp_path, dataset):
    path = tmp_path / "demo.json"
    serialize.save_dataset(path, dataset)
    with pytest.raises(serialize.FileFormatError):
        serialize.load_tree(path)
