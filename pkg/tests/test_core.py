from __future__ import annotations

import numpy as np
import pytest

from ismtrees.core import (
    DemonstrationDataset,
    ObjectId,
    ObjectState,
    RecognitionParams,
    Trajectory,
    learn_single_ism,
    orientation_compliance,
    position_compliance,
    recognize_single_ism,
)
from ismtrees.errors import EmptyNeighborhoodError, LengthMismatchError
from ismtrees.geometry import Pose, compose

from conftest import random_pose


def static_trajectory(oid: ObjectId, pose: Pose, length: int) -> Trajectory:
    return Trajectory(oid, tuple([pose] * length))


def line_trajectory(oid: ObjectId, start, step, length: int) -> Trajectory:
    poses = [
        Pose.from_translation(start[0] + i * step[0], start[1] + i * step[1], start[2] + i * step[2])
        for i in range(length)
    ]
    return Trajectory(oid, tuple(poses))


CENTER = ObjectId("box", "1")
CUP = ObjectId("cup", "1")
PLATE = ObjectId("plate", "1")


class TestLearning:
    def test_identical_neighbor_gives_identity_votes(self, rng):
        length = 4
        poses = tuple(random_pose(rng) for _ in range(length))
        center = Trajectory(CENTER, poses)
        neighbor = Trajectory(CUP, poses)
        ism, reference = learn_single_ism("scene", center, [neighbor])
        assert reference is center
        for sample in ism.vote_table[CUP]:
            assert sample.vote_to_reference.approx_equal(Pose.identity())

    def test_offset_votes_point_back_to_center(self, rng):
        # cup rides 0.3 m left of the center; every vote must map the cup
        # pose back onto the center pose (compose-and-check oracle)
        length = 6
        center = line_trajectory(CENTER, (0, 0, 0), (0.1, 0, 0), length)
        cup_poses = tuple(
            Pose.from_translation(p.position[0] - 0.3, p.position[1], p.position[2])
            for p in center.poses
        )
        cup = Trajectory(CUP, cup_poses)
        ism, _ = learn_single_ism("scene", center, [cup])
        for t, sample in enumerate(ism.vote_table[CUP]):
            np.testing.assert_allclose(
                sample.vote_to_reference.position, [0.3, 0, 0], atol=1e-9
            )
            voted = compose(cup.poses[t], sample.vote_to_reference)
            assert voted.approx_equal(center.poses[t])
            back = compose(center.poses[t], sample.back_to_object)
            assert back.approx_equal(cup.poses[t])

    def test_vote_table_size(self, rng):
        length = 5
        center = static_trajectory(CENTER, random_pose(rng), length)
        neighbors = [
            static_trajectory(ObjectId("obj", str(i)), random_pose(rng), length)
            for i in range(3)
        ]
        ism, _ = learn_single_ism("scene", center, neighbors)
        # n neighbor entries of l samples each, plus the center's own entry
        neighbor_samples = sum(
            len(ism.vote_table[t.object_id]) for t in neighbors
        )
        assert neighbor_samples == 3 * length
        assert len(ism.vote_table) == 4
        assert len(ism.vote_table[CENTER]) == length
        assert ism.total_weight == 4

    def test_errors(self, rng):
        center = static_trajectory(CENTER, random_pose(rng), 3)
        short = static_trajectory(CUP, random_pose(rng), 2)
        with pytest.raises(LengthMismatchError):
            learn_single_ism("scene", center, [short])
        with pytest.raises(EmptyNeighborhoodError):
            learn_single_ism("scene", center, [])


class TestCompliance:
    def test_zero_deviation(self):
        assert position_compliance([0, 0, 0], [0, 0, 0], 0.1) == 1.0
        assert orientation_compliance([1, 0, 0, 0], [1, 0, 0, 0], 30.0) == pytest.approx(1.0)

    def test_at_or_beyond_tolerance_is_zero(self):
        assert position_compliance([0, 0, 0], [0.1, 0, 0], 0.1) == 0.0
        assert position_compliance([0, 0, 0], [0.5, 0, 0], 0.1) == 0.0
        quarter = Pose.from_axis_angle([0, 0, 1], 45.0)
        assert orientation_compliance([1, 0, 0, 0], quarter.orientation, 30.0) == 0.0

    def test_linear_falloff(self):
        # 1 - d/tau, e.g. d=0.05 at tau=0.179 -> 0.7206...
        value = position_compliance([0, 0, 0], [0.05, 0, 0], 0.179)
        assert value == pytest.approx(1.0 - 0.05 / 0.179, abs=1e-12)

    def test_strictly_decreasing(self):
        values = [
            position_compliance([0, 0, 0], [d, 0, 0], 0.1)
            for d in (0.0, 0.02, 0.04, 0.06, 0.08)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))
        angles = [
            orientation_compliance(
                [1, 0, 0, 0], Pose.from_axis_angle([0, 1, 0], a).orientation, 30.0
            )
            for a in (0.0, 5.0, 10.0, 20.0)
        ]
        assert all(a > b for a, b in zip(angles, angles[1:]))


def two_screen_ism(length: int = 5):
    left = static_trajectory(ObjectId("screen_left", "1"), Pose.from_translation(0, 0, 0), length)
    right = static_trajectory(ObjectId("screen_right", "1"), Pose.from_translation(0.4, 0, 0), length)
    ism, _ = learn_single_ism("office_sub0", left, [right])
    return ism, left, right


class TestRecognition:
    def test_self_recognition_full_confidence(self):
        ism, left, right = two_screen_ism()
        inputs = [
            ObjectState(left.object_id, left.poses[0]),
            ObjectState(right.object_id, right.poses[0]),
        ]
        results = recognize_single_ism(inputs, ism, RecognitionParams())
        assert results
        top = results[0]
        assert top.confidence >= 1 - 1e-6
        assert top.objective_value == pytest.approx(2.0, abs=1e-9)
        assert {p.state.id for p in top.participants} == {left.object_id, right.object_id}
        assert top.reference_pose.approx_equal(left.poses[0], atol=1e-6)

    def test_displacement_beyond_tolerance_excludes_object(self):
        ism, left, right = two_screen_ism()
        params = RecognitionParams(tau_pos=0.1)
        inputs = [
            ObjectState(left.object_id, left.poses[0]),
            ObjectState(right.object_id, Pose.from_translation(0.4, 0, -0.2)),
        ]
        results = recognize_single_ism(inputs, ism, params)
        top = results[0]
        # analogue of a fully lowered screen: objective 2.00 -> 1.00
        assert top.objective_value == pytest.approx(1.0, abs=1e-9)
        assert {p.state.id for p in top.participants} == {left.object_id}

    def test_subthreshold_displacement_keeps_object_with_reduced_compliance(self):
        ism, left, right = two_screen_ism()
        params = RecognitionParams(tau_pos=0.1)
        inputs = [
            ObjectState(left.object_id, left.poses[0]),
            ObjectState(right.object_id, Pose.from_translation(0.4, 0, -0.05)),
        ]
        top = recognize_single_ism(inputs, ism, params)[0]
        by_id = {p.state.id: p for p in top.participants}
        assert right.object_id in by_id
        assert by_id[right.object_id].position_compliance == pytest.approx(0.5, abs=1e-9)
        assert top.objective_value == pytest.approx(1.5, abs=1e-9)

    def test_empty_inputs(self):
        ism, _, _ = two_screen_ism()
        assert recognize_single_ism([], ism, RecognitionParams()) == []

    def test_irrelevant_object_changes_nothing(self, rng):
        ism, left, right = two_screen_ism()
        inputs = [
            ObjectState(left.object_id, left.poses[0]),
            ObjectState(right.object_id, right.poses[0]),
        ]
        baseline = recognize_single_ism(inputs, ism, RecognitionParams())
        extra = inputs + [ObjectState(ObjectId("teapot", "9"), random_pose(rng))]
        with_extra = recognize_single_ism(extra, ism, RecognitionParams())
        assert len(baseline) == len(with_extra)
        for a, b in zip(baseline, with_extra):
            assert a.objective_value == pytest.approx(b.objective_value, abs=1e-12)
            assert a.participant_identities() == b.participant_identities()

    def test_rigid_motion_invariance(self, rng):
        ism, left, right = two_screen_ism()
        inputs = [
            ObjectState(left.object_id, left.poses[0]),
            ObjectState(right.object_id, Pose.from_translation(0.4, 0.03, 0.0)),
        ]
        base = recognize_single_ism(inputs, ism, RecognitionParams())[0]
        for _ in range(20):
            g = random_pose(rng, span=2.0)
            moved = [ObjectState(s.id, compose(g, s.pose)) for s in inputs]
            res = recognize_single_ism(moved, ism, RecognitionParams())[0]
            assert res.objective_value == pytest.approx(base.objective_value, abs=1e-6)
            assert res.reference_pose.approx_equal(compose(g, base.reference_pose), atol=1e-7)

    def test_monotone_position_compliance(self):
        ism, left, right = two_screen_ism()
        params = RecognitionParams(tau_pos=0.1)
        last = 1.1
        for d in (0.0, 0.02, 0.04, 0.06, 0.08):
            inputs = [
                ObjectState(left.object_id, left.poses[0]),
                ObjectState(right.object_id, Pose.from_translation(0.4, d, 0)),
            ]
            top = recognize_single_ism(inputs, ism, params)[0]
            by_id = {p.state.id: p for p in top.participants}
            comp = by_id[right.object_id].position_compliance
            assert comp < last
            last = comp

    def test_duplicate_states_compete_and_best_one_wins(self):
        # two detections of the same object: each result uses at most one of
        # them, and the consistent higher-confidence one carries the top result
        ism, left, right = two_screen_ism()
        inputs = [
            ObjectState(left.object_id, left.poses[0]),
            ObjectState(right.object_id, Pose.from_translation(9.9, 9.9, 9.9), confidence=0.3),
            ObjectState(right.object_id, right.poses[0], confidence=0.9),
        ]
        top = recognize_single_ism(inputs, ism, RecognitionParams())[0]
        by_id = {p.state.id: p for p in top.participants}
        assert len(top.participants) == 2
        assert by_id[right.object_id].state.confidence == 0.9
        assert top.objective_value == pytest.approx(1.0 + 0.9, abs=1e-9)

    def test_self_recognition_at_every_timestep_of_moving_scene(self, rng):
        length = 6
        center = line_trajectory(CENTER, (0, 0, 0), (0.05, 0.02, 0), length)
        cup = line_trajectory(CUP, (-0.3, 0, 0), (0.05, 0.02, 0), length)
        plate = line_trajectory(PLATE, (0.2, 0.1, 0), (0.01, 0.0, 0.03), length)
        ism, _ = learn_single_ism("scene", center, [cup, plate])
        dataset = DemonstrationDataset(
            "scene", {t.object_id: t for t in (center, cup, plate)}
        )
        for t in range(length):
            results = recognize_single_ism(
                dataset.configuration_at(t), ism, RecognitionParams()
            )
            assert results[0].confidence >= 1 - 1e-6
