from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ismtrees.core import DemonstrationDataset, ObjectId, ObjectState, Trajectory
from ismtrees.estimator import SceneRecognizer, as_configurations
from ismtrees.geometry import Pose
from ismtrees.topology import RelationTopology

KEYBOARD = ObjectId("keyboard", "1")
MOUSE = ObjectId("mouse", "1")
SCREEN_L = ObjectId("screen_left", "1")
SCREEN_R = ObjectId("screen_right", "1")


@pytest.fixture
def dataset():
    positions = {
        KEYBOARD: (0.0, 0.0, 0.0),
        MOUSE: (0.3, -0.1, 0.0),
        SCREEN_L: (-0.1, 0.4, 0.0),
        SCREEN_R: (0.3, 0.4, 0.0),
    }
    return DemonstrationDataset(
        "office",
        {
            oid: Trajectory(oid, tuple([Pose.from_translation(*pos)] * 4))
            for oid, pos in positions.items()
        },
    )


class TestSklearnContract:
    def test_get_params_round_trip(self):
        est = SceneRecognizer(tau_pos=0.2, eps_r=0.7)
        params = est.get_params()
        assert params["tau_pos"] == 0.2
        assert params["eps_r"] == 0.7
        est.set_params(tau_rot=45.0)
        assert est.tau_rot == 45.0

    def test_clone_keeps_params_and_drops_state(self, dataset):
        est = SceneRecognizer(topology="complete", bin_size=0.15).fit(dataset)
        twin = clone(est)
        assert twin.get_params() == est.get_params()
        assert not hasattr(twin, "tree_")

    def test_fit_returns_self_and_sets_state(self, dataset):
        est = SceneRecognizer()
        assert est.fit(dataset) is est
        assert est.tree_.category_label == "office"
        assert est.category_label_ == "office"
        assert set(est.paths_) == set(dataset.object_ids())

    def test_not_fitted_errors(self, dataset):
        est = SceneRecognizer()
        with pytest.raises(NotFittedError):
            est.predict([dataset.configuration_at(0)])

    def test_fit_rejects_wrong_type(self):
        with pytest.raises(TypeError):
            SceneRecognizer().fit([[1, 2, 3]])

    def test_invalid_topology_parameter(self, dataset):
        with pytest.raises(ValueError):
            SceneRecognizer(topology="ring").fit(dataset)


class TestPrediction:
    def test_decision_function_and_predict(self, dataset):
        est = SceneRecognizer(topology="complete").fit(dataset)
        good = dataset.configuration_at(0)
        bad = [
            ObjectState(s.id, Pose(s.pose.position + np.array([0, 0, 0.5]), s.pose.orientation))
            if s.id == SCREEN_R
            else s
            for s in good
        ]
        scores = est.decision_function([good, bad, []])
        assert scores[0] == pytest.approx(1.0, abs=1e-6)
        assert scores[1] < scores[0]
        assert scores[2] == 0.0
        decided = est.predict([good, bad, []])
        assert decided.tolist() == [True, False, False]

    def test_single_configuration_accepted(self, dataset):
        est = SceneRecognizer().fit(dataset)
        assert est.predict(dataset.configuration_at(0)).tolist() == [True]

    def test_predict_instances_and_poses(self, dataset):
        est = SceneRecognizer(eps_r=0.4).fit(dataset)
        partial = [s for s in dataset.configuration_at(0) if s.id in (KEYBOARD, MOUSE)]
        instances = est.predict_instances([partial])[0]
        assert instances
        cloud = est.predict_poses(instances[0], n_predictions=20, random_state=1)
        assert set(cloud) == {SCREEN_L, SCREEN_R}
        assert all(len(poses) == 20 for _, poses in cloud.items())
        # static demonstration: predictions are exact
        for oid, poses in cloud.items():
            for pose in poses:
                assert pose.approx_equal(dataset.trajectories[oid].poses[0], atol=1e-9)

    def test_explicit_topology_object(self, dataset):
        topology = RelationTopology(
            dataset.object_ids(),
            [(KEYBOARD, MOUSE), (KEYBOARD, SCREEN_L), (SCREEN_L, SCREEN_R)],
        )
        est = SceneRecognizer(topology=topology).fit(dataset)
        assert len(est.tree_.isms) == 2


class TestInputValidation:
    def test_as_configurations_shapes(self, dataset):
        config = dataset.configuration_at(0)
        assert as_configurations(config) == [config]
        assert as_configurations([config, config]) == [config, config]
        assert as_configurations([]) == []
        with pytest.raises(TypeError):
            as_configurations([[1, 2]])
