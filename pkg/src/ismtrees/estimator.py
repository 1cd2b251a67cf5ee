"""Estimator-style facade: fit a scene model, predict instances and poses.

`SceneRecognizer` follows the scikit-learn conventions (constructor stores
parameters verbatim, `fit` returns self, fitted state lives in trailing
underscore attributes, `get_params`/`set_params`/`clone` work), so the scene
model composes with the wider ecosystem: configurations in, confidence
scores or boolean decisions out.
"""

from __future__ import annotations

from typing import Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import DemonstrationDataset, ObjectState, RecognitionParams
from .prediction import PredictionCloud, compute_shortest_paths, generate_cloud_of_pose_predictions
from .topology import RelationTopology, complete_topology, star_topology
from .tree import SceneInstance, learn_tree_from_topology, recognize_scene


def as_configurations(X) -> list:
    """Normalize input to a list of configurations (lists of ObjectState).

    Accepts a single configuration (an iterable of ObjectState) or a
    sequence of configurations.
    """
    items = list(X)
    if not items:
        return []
    if all(isinstance(item, ObjectState) for item in items):
        return [items]
    configurations = []
    for item in items:
        states = list(item)
        if not all(isinstance(s, ObjectState) for s in states):
            raise TypeError(
                "expected ObjectState items; got "
                f"{type(states[0]).__name__ if states else 'empty configuration'}"
            )
        configurations.append(states)
    return configurations


class SceneRecognizer(BaseEstimator):
    """Scene-category classifier learned from demonstrated object trajectories.

    Parameters
    ----------
    topology : "star", "complete", or a RelationTopology
        Which spatial relations the model covers.
    bin_size, tau_pos, tau_rot : voting grid size and compliance tolerances.
    result_keep_threshold : minimum confidence for intermediate results to
        propagate between hierarchy levels.
    eps_r : minimum root confidence for a configuration to count as an
        instance of the category.
    max_results_per_ism : cap on intermediate results passed upward.
    """

    def __init__(
        self,
        topology: Union[str, RelationTopology] = "star",
        bin_size: float = 0.1,
        tau_pos: float = 0.1,
        tau_rot: float = 30.0,
        result_keep_threshold: float = 0.5,
        eps_r: float = 0.6,
        max_results_per_ism: int = 32,
    ):
        self.topology = topology
        self.bin_size = bin_size
        self.tau_pos = tau_pos
        self.tau_rot = tau_rot
        self.result_keep_threshold = result_keep_threshold
        self.eps_r = eps_r
        self.max_results_per_ism = max_results_per_ism

    def _recognition_params(self) -> RecognitionParams:
        return RecognitionParams(
            bin_size=self.bin_size,
            tau_pos=self.tau_pos,
            tau_rot=self.tau_rot,
            result_keep_threshold=self.result_keep_threshold,
            eps_r=self.eps_r,
            max_results_per_ism=self.max_results_per_ism,
        )

    def _resolve_topology(self, dataset: DemonstrationDataset) -> RelationTopology:
        if isinstance(self.topology, RelationTopology):
            return self.topology
        if self.topology == "star":
            return star_topology(dataset.object_ids())
        if self.topology == "complete":
            return complete_topology(dataset.object_ids())
        raise ValueError(
            f"topology must be 'star', 'complete', or a RelationTopology, got {self.topology!r}"
        )

    def fit(self, X: DemonstrationDataset, y=None) -> "SceneRecognizer":
        """Learn the category tree from a demonstration dataset."""
        if not isinstance(X, DemonstrationDataset):
            raise TypeError(f"fit expects a DemonstrationDataset, got {type(X).__name__}")
        self._recognition_params()  # validate thresholds before doing work
        self.tree_ = learn_tree_from_topology(X, self._resolve_topology(X))
        self.paths_ = compute_shortest_paths(self.tree_)
        self.category_label_ = X.category_label
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "tree_"):
            raise NotFittedError("this SceneRecognizer is not fitted yet; call fit first")

    def predict_instances(self, X) -> list:
        """Scene instances per configuration, best first."""
        self._check_fitted()
        params = self._recognition_params()
        return [
            recognize_scene(config, self.tree_, params)
            for config in as_configurations(X)
        ]

    def decision_function(self, X) -> np.ndarray:
        """Best root confidence per configuration (0.0 when nothing assembled)."""
        self._check_fitted()
        params = self._recognition_params()
        permissive = RecognitionParams(
            bin_size=params.bin_size,
            tau_pos=params.tau_pos,
            tau_rot=params.tau_rot,
            result_keep_threshold=params.result_keep_threshold,
            eps_r=0.0,
            max_results_per_ism=params.max_results_per_ism,
        )
        scores = []
        for config in as_configurations(X):
            instances = recognize_scene(config, self.tree_, permissive)
            scores.append(instances[0].confidence if instances else 0.0)
        return np.asarray(scores)

    def predict(self, X) -> np.ndarray:
        """Whether each configuration contains an instance of the category."""
        return self.decision_function(X) >= self.eps_r

    def predict_poses(
        self,
        instance: SceneInstance,
        n_predictions: int = 100,
        random_state: Union[int, np.random.Generator] = 0,
    ) -> PredictionCloud:
        """Sampled pose hypotheses for the category objects missing from an instance."""
        self._check_fitted()
        rng = (
            random_state
            if isinstance(random_state, np.random.Generator)
            else np.random.default_rng(random_state)
        )
        return generate_cloud_of_pose_predictions(
            instance, self.paths_, n_predictions, self.tree_, rng
        )
