from __future__ import annotations

import numpy as np
import pytest

from ismtrees.core import ObjectId, ObjectState, RecognitionParams, Trajectory
from ismtrees.errors import EmptyTestSetError, TooLargeForOracleError
from ismtrees.geometry import Pose, compose, relative
from ismtrees.harness.asr import (
    AsrParams,
    CameraModel,
    SimWorld,
    View,
    run_asr_simulation,
    visible,
)
from ismtrees.harness.datasets import (
    ScenarioSpec,
    generate_demonstration,
    generate_perturbed_test_set,
    make_moving_pair_dataset,
)
from ismtrees.harness.metrics import (
    avg_dur,
    bench_prediction,
    bench_recognition,
    num_fps,
    optimize_topology,
)
from ismtrees.harness.oracle import brute_force_recognition_oracle
from ismtrees.core import recognize_single_ism, learn_single_ism
from ismtrees.topology import TopologySearchParams, complete_topology, star_topology
from ismtrees.tree import learn_tree_from_topology


def random_configuration(dataset, rng, tau_pos=0.1):
    """A perturbed demonstrated configuration exercising partial matches."""
    t = int(rng.integers(dataset.length))
    states = []
    for s in dataset.configuration_at(t):
        offset = rng.normal(scale=0.4 * tau_pos, size=3)
        if rng.random() < 0.3:
            offset += rng.uniform(0.5, 2.0) * tau_pos * rng.standard_normal(3)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        wobble = Pose.from_axis_angle(axis, float(rng.normal(scale=8.0)))
        moved = compose(s.pose, wobble)
        states.append(ObjectState(s.id, Pose(moved.position + offset, moved.orientation)))
    return states


class TestGenerators:
    def test_static_two_objects(self):
        spec = ScenarioSpec(object_count=2, trajectory_length=1, motion="static", seed=4)
        dataset = generate_demonstration(spec)
        assert len(dataset.trajectories) == 2
        assert dataset.length == 1

    def test_seed_determinism(self):
        spec = ScenarioSpec(object_count=4, trajectory_length=6, motion="jitter", seed=9)
        a = generate_demonstration(spec)
        b = generate_demonstration(spec)
        for oid in a.object_ids():
            for pa, pb in zip(a.trajectories[oid].poses, b.trajectories[oid].poses):
                assert pa.approx_equal(pb, atol=0.0)

    def test_zero_jitter_equals_static(self):
        base = ScenarioSpec(object_count=3, trajectory_length=4, motion="static", seed=2)
        jittered = ScenarioSpec(
            object_count=3,
            trajectory_length=4,
            motion="jitter",
            jitter_sigma=0.0,
            jitter_rot_sigma_deg=0.0,
            seed=2,
        )
        a = generate_demonstration(base)
        b = generate_demonstration(jittered)
        for oid in a.object_ids():
            for pa, pb in zip(a.trajectories[oid].poses, b.trajectories[oid].poses):
                assert pa.approx_equal(pb, atol=1e-12)

    def test_rigid_groups_keep_constant_intragroup_relations(self):
        spec = ScenarioSpec(
            object_count=4, trajectory_length=5, motion="rigid_groups", group_count=2, seed=8
        )
        dataset = generate_demonstration(spec)
        ids = dataset.object_ids()
        # groups are assigned round-robin, so ids 0 and 2 share group 0
        a, b = dataset.trajectories[ids[0]], dataset.trajectories[ids[2]]
        first = relative(a.poses[0], b.poses[0])
        for t in range(1, 5):
            assert relative(a.poses[t], b.poses[t]).approx_equal(first, atol=1e-9)


class TestPerturbedTestSets:
    @pytest.fixture
    def dataset(self):
        return generate_demonstration(
            ScenarioSpec(object_count=3, trajectory_length=5, motion="jitter", seed=6)
        )

    def test_mixed_exact_split(self, dataset):
        configs = generate_perturbed_test_set(dataset, "mixed", 0.25, 100, seed=1)
        assert len(configs) == 100
        assert sum(1 for c in configs if c.valid) == 50

    def test_shift_labels_invalid(self, dataset):
        configs = generate_perturbed_test_set(dataset, "shift", 0.3, 10, seed=1)
        assert all(not c.valid for c in configs)
        assert all(c.kind == "shift" for c in configs)

    def test_degenerate_swap_is_valid(self):
        oid_a, oid_b = ObjectId("a", "1"), ObjectId("b", "1")
        pose = Pose.from_translation(0.1, 0.2, 0.3)
        from ismtrees.core import DemonstrationDataset

        dataset = DemonstrationDataset(
            "twins",
            {
                oid_a: Trajectory(oid_a, (pose,)),
                oid_b: Trajectory(oid_b, (pose,)),
            },
        )
        configs = generate_perturbed_test_set(dataset, "swap", 0.1, 5, seed=0)
        assert all(c.valid for c in configs)

    def test_unknown_kind(self, dataset):
        with pytest.raises(ValueError):
            generate_perturbed_test_set(dataset, "teleport", 0.1, 5)


class TestOracle:
    def test_demonstrated_configuration_reaches_total_weight(self):
        dataset = generate_demonstration(
            ScenarioSpec(object_count=3, trajectory_length=4, motion="jitter", seed=5)
        )
        topology = star_topology(dataset.object_ids())
        result = brute_force_recognition_oracle(
            dataset.configuration_at(2), dataset, topology, RecognitionParams()
        )
        assert result.objective_value == pytest.approx(3.0, abs=1e-9)

    def test_size_guard(self):
        dataset = generate_demonstration(
            ScenarioSpec(object_count=5, trajectory_length=4, seed=0)
        )
        with pytest.raises(TooLargeForOracleError):
            brute_force_recognition_oracle(
                dataset.configuration_at(0),
                dataset,
                star_topology(dataset.object_ids()),
                RecognitionParams(),
            )

    @pytest.mark.parametrize("n,l", [(2, 3), (3, 5), (4, 4)])
    def test_accumulator_matches_oracle(self, n, l):
        dataset = generate_demonstration(
            ScenarioSpec(object_count=n, trajectory_length=l, motion="jitter", seed=n * 10 + l)
        )
        topology = star_topology(dataset.object_ids())
        center = dataset.object_ids()[0]
        center_traj = dataset.trajectories[center]
        neighbors = [t for oid, t in sorted(dataset.trajectories.items()) if oid != center]
        ism, _ = learn_single_ism("oracle_scene", center_traj, neighbors)
        params = RecognitionParams()
        rng = np.random.default_rng(n * 100 + l)
        for _ in range(30):
            config = random_configuration(dataset, rng, params.tau_pos)
            oracle = brute_force_recognition_oracle(config, dataset, topology, params)
            results = recognize_single_ism(config, ism, params)
            best = max((r.objective_value for r in results), default=0.0)
            assert best == pytest.approx(oracle.objective_value, abs=1e-9)


@pytest.fixture(scope="module")
def pair_setup():
    dataset = make_moving_pair_dataset(length=15, step=0.05)
    params = RecognitionParams(result_keep_threshold=0.6, eps_r=0.75)
    test_set = generate_perturbed_test_set(
        dataset, "swap", 0.3, 30, seed=2, valid_jitter_pos=0.004
    )
    return dataset, params, test_set


class TestMetrics:
    def test_star_fps_exceed_complete(self, pair_setup):
        dataset, params, test_set = pair_setup
        star_tree = learn_tree_from_topology(dataset, star_topology(dataset.object_ids()))
        complete_tree = learn_tree_from_topology(dataset, complete_topology(dataset.object_ids()))
        star_fps = num_fps(star_tree, test_set, params)
        complete_fps = num_fps(complete_tree, test_set, params)
        assert star_fps > 0.0
        assert complete_fps == 0.0

    def test_num_fps_requires_invalid_configs(self, pair_setup):
        dataset, params, _ = pair_setup
        tree = learn_tree_from_topology(dataset, star_topology(dataset.object_ids()))
        valid_only = generate_perturbed_test_set(dataset, "mixed", 0.3, 6, seed=4)
        valid_only = [c for c in valid_only if c.valid]
        with pytest.raises(EmptyTestSetError):
            num_fps(tree, valid_only, params)
        with pytest.raises(EmptyTestSetError):
            avg_dur(tree, [], params)

    def test_optimized_topology_beats_star_on_fps(self, pair_setup):
        dataset, params, test_set = pair_setup
        star_tree = learn_tree_from_topology(dataset, star_topology(dataset.object_ids()))
        star_fps = num_fps(star_tree, test_set, params)
        optimized = optimize_topology(
            dataset, test_set, params, TopologySearchParams(max_rounds=3, lambda_fp=1.0)
        )
        assert optimized.is_connected()
        optimized_tree = learn_tree_from_topology(dataset, optimized)
        assert num_fps(optimized_tree, test_set, params) <= star_fps
        assert len(optimized.relations) <= len(complete_topology(dataset.object_ids()).relations)

    def test_bench_rows(self):
        rows = bench_recognition([(3, 10)], repeats=2)
        assert len(rows) == 1
        assert rows[0].object_count == 3
        assert rows[0].mean_s > 0
        pred = bench_prediction([(3, 10)], n_predictions=20, repeats=2)
        assert pred[0].mean_s > 0


class TestAsr:
    def test_frustum_visibility(self):
        camera = CameraModel(fov_deg=90.0, min_range=0.2, max_range=3.0)
        view = View(0.0, 0.0, 0.0)
        assert visible(view, camera, [1.0, 0.0, 0.5])
        assert visible(view, camera, [1.0, 0.9, 0.0])
        assert not visible(view, camera, [-1.0, 0.0, 0.0])
        assert not visible(view, camera, [4.0, 0.0, 0.0])
        assert not visible(view, camera, [0.1, 0.0, 0.0])

    @pytest.fixture
    def small_world(self):
        dataset = generate_demonstration(
            ScenarioSpec(object_count=3, trajectory_length=4, motion="jitter",
                         jitter_sigma=0.005, jitter_rot_sigma_deg=0.5, workspace=0.4, seed=12)
        )
        tree = learn_tree_from_topology(dataset, star_topology(dataset.object_ids()))
        true_states = dataset.configuration_at(1)
        world = SimWorld(
            true_states=true_states,
            robot=View(-1.5, 0.0, 0.0),
            camera=CameraModel(fov_deg=100.0, min_range=0.1, max_range=4.0),
            bounds=((-2.0, 2.0), (-2.0, 2.0)),
            clutter=[
                ObjectState(ObjectId("clutter", str(i)), Pose.from_translation(0.2 * i, -0.3, 0))
                for i in range(3)
            ],
        )
        informed = [s.pose.position for s in true_states]
        params = AsrParams(informed_positions=informed, seed=3)
        return world, tree, params, dataset

    def test_everything_visible_from_first_informed_view(self, small_world):
        world, tree, params, dataset = small_world
        log = run_asr_simulation(world, [tree], params)
        assert log.found_ids == {s.id for s in world.true_states}
        direct_views = [e for e in log.entries if e.state == "DIRECT_SEARCH" and e.view]
        assert len(direct_views) == 1
        states = {e.state for e in log.entries}
        assert states <= {
            "DIRECT_SEARCH",
            "SCENE_RECOGNITION",
            "OBJECT_POSE_PREDICTION",
            "RELATION_BASED_SEARCH",
        }

    def test_clutter_never_enters_instances(self, small_world):
        world, tree, params, _ = small_world
        log = run_asr_simulation(world, [tree], params)
        for instance in log.final_instances.values():
            for oid in instance.real_participants():
                assert oid.class_label != "clutter"

    def test_sweep_only_mode_terminates_and_finds_all(self, small_world):
        world, tree, params, _ = small_world
        sweep_params = AsrParams(mode="sweep_only", seed=3, sweep_step=1.0)
        log = run_asr_simulation(world, [tree], sweep_params)
        assert log.found_ids == {s.id for s in world.true_states}
        assert all(e.state == "DIRECT_SEARCH" for e in log.entries if e.view)

    def test_bbox_mode_sweeps_given_boxes(self, small_world):
        world, tree, _, _ = small_world
        xs = [float(s.pose.position[0]) for s in world.true_states]
        ys = [float(s.pose.position[1]) for s in world.true_states]
        box = (
            (min(xs) - 0.3, max(xs) + 0.3),
            (min(ys) - 0.3, max(ys) + 0.3),
            (-0.5, 0.5),
        )
        params = AsrParams(mode="bbox", bounding_boxes=[box], seed=3)
        log = run_asr_simulation(world, [tree], params)
        assert log.found_ids == {s.id for s in world.true_states}
        assert all(
            e.state in ("RELATION_BASED_SEARCH", "SCENE_RECOGNITION")
            for e in log.entries
        )

    def test_paired_seeds_reproduce_the_same_run(self, small_world):
        world, tree, params, _ = small_world
        first = run_asr_simulation(world, [tree], params)
        second = run_asr_simulation(world, [tree], params)
        assert [e.state for e in first.entries] == [e.state for e in second.entries]
        assert [e.view for e in first.entries] == [e.view for e in second.entries]
        assert first.found_ids == second.found_ids
