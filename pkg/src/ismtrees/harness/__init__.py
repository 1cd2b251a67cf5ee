"""Synthetic data, perturbation test sets, measurement, oracle, and simulation."""

from .datasets import (
    LabeledConfiguration,
    ScenarioSpec,
    generate_demonstration,
    generate_perturbed_test_set,
    make_moving_pair_dataset,
)
from .metrics import avg_dur, bench_prediction, bench_recognition, num_fps, optimize_topology
from .oracle import OracleResult, brute_force_recognition_oracle

__all__ = [
    "LabeledConfiguration",
    "ScenarioSpec",
    "generate_demonstration",
    "generate_perturbed_test_set",
    "make_moving_pair_dataset",
    "avg_dur",
    "bench_prediction",
    "bench_recognition",
    "num_fps",
    "optimize_topology",
    "OracleResult",
    "brute_force_recognition_oracle",
]
