"""Goodness measures, topology optimization wiring, and runtime benchmarks."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import DemonstrationDataset, RecognitionParams
from ..errors import EmptyTestSetError
from ..prediction import compute_shortest_paths, generate_cloud_of_pose_predictions
from ..topology import (
    RelationTopology,
    TopologySearchParams,
    select_topology,
    star_topology,
)
from ..tree import IsmTree, learn_tree_from_topology, recognize_scene
from .datasets import ScenarioSpec, generate_demonstration

_WARMUP_RUNS = 2


def num_fps(tree: IsmTree, test_set: Sequence, params: RecognitionParams) -> float:
    """False-positive percentage: invalid configurations that still yield an instance."""
    invalid = [c for c in test_set if not c.valid]
    if not invalid:
        raise EmptyTestSetError("test set contains no invalid configurations")
    false_positives = sum(
        1 for c in invalid if recognize_scene(c.states, tree, params)
    )
    return 100.0 * false_positives / len(invalid)


def avg_dur(tree: IsmTree, test_set: Sequence, params: RecognitionParams) -> float:
    """Mean wall-clock seconds of one recognition over the test set, after 2 warm-ups."""
    if not test_set:
        raise EmptyTestSetError("test set is empty")
    for _ in range(_WARMUP_RUNS):
        recognize_scene(test_set[0].states, tree, params)
    total = 0.0
    for config in test_set:
        start = time.perf_counter()
        recognize_scene(config.states, tree, params)
        total += time.perf_counter() - start
    return total / len(test_set)


def topology_score(
    topology: RelationTopology,
    dataset: DemonstrationDataset,
    test_set: Sequence,
    params: RecognitionParams,
    lambda_fp: float,
) -> float:
    """Combined selection objective: lambda_fp * numFPs + avgDur."""
    tree = learn_tree_from_topology(dataset, topology)
    return lambda_fp * num_fps(tree, test_set, params) + avg_dur(tree, test_set, params)


def optimize_topology(
    dataset: DemonstrationDataset,
    test_set: Sequence,
    params: RecognitionParams,
    search: Optional[TopologySearchParams] = None,
) -> RelationTopology:
    """Hill-climb a relation topology against the false-positive/runtime objective."""
    search = search or TopologySearchParams()
    return select_topology(
        score=lambda top: topology_score(top, dataset, test_set, params, search.lambda_fp),
        objects=dataset.object_ids(),
        params=search,
    )


@dataclass
class BenchRow:
    object_count: int
    trajectory_length: int
    mean_s: float
    std_s: float

    def as_dict(self) -> dict:
        return {
            "n": self.object_count,
            "l": self.trajectory_length,
            "mean_s": self.mean_s,
            "std_s": self.std_s,
        }


def _cell_dataset(n: int, length: int) -> DemonstrationDataset:
    spec = ScenarioSpec(
        object_count=n,
        trajectory_length=length,
        motion="jitter",
        jitter_sigma=0.02,
        jitter_rot_sigma_deg=2.0,
        seed=1000 * n + length,
    )
    return generate_demonstration(spec)


def bench_recognition(
    grid: Sequence,
    params: Optional[RecognitionParams] = None,
    repeats: int = 3,
) -> list:
    """Mean recognition time per (n, l) cell on deterministic synthetic data."""
    if not grid:
        raise ValueError("benchmark grid is empty")
    params = params or RecognitionParams()
    rows = []
    for n, length in grid:
        dataset = _cell_dataset(n, length)
        tree = learn_tree_from_topology(dataset, star_topology(dataset.object_ids()))
        config = dataset.configuration_at(length // 2)
        recognize_scene(config, tree, params)
        samples = []
        for _ in range(repeats):
            start = time.perf_counter()
            recognize_scene(config, tree, params)
            samples.append(time.perf_counter() - start)
        rows.append(BenchRow(n, length, float(np.mean(samples)), float(np.std(samples))))
    return rows


def bench_prediction(
    grid: Sequence,
    n_predictions: int = 100,
    params: Optional[RecognitionParams] = None,
    repeats: int = 3,
    seed: int = 0,
) -> list:
    """Mean time to predict poses for the whole category from a one-object instance."""
    if not grid:
        raise ValueError("benchmark grid is empty")
    params = params or RecognitionParams()
    rows = []
    for n, length in grid:
        dataset = _cell_dataset(n, length)
        tree = learn_tree_from_topology(dataset, star_topology(dataset.object_ids()))
        paths = compute_shortest_paths(tree)
        # a single detected object keeps almost the whole category missing
        single = [dataset.configuration_at(length // 2)[0]]
        permissive = RecognitionParams(
            bin_size=params.bin_size,
            tau_pos=params.tau_pos,
            tau_rot=params.tau_rot,
            result_keep_threshold=0.0,
            eps_r=0.0,
            max_results_per_ism=params.max_results_per_ism,
        )
        instance = recognize_scene(single, tree, permissive)[0]
        samples = []
        for rep in range(repeats + 1):
            rng = np.random.default_rng(seed + rep)
            start = time.perf_counter()
            generate_cloud_of_pose_predictions(instance, paths, n_predictions, tree, rng)
            elapsed = time.perf_counter() - start
            if rep > 0:
                samples.append(elapsed)
        rows.append(BenchRow(n, length, float(np.mean(samples)), float(np.std(samples))))
    return rows
