"""Hierarchical Implicit Shape Model trees for 3-D scene recognition.

Learn scene-category models from demonstrated 6-DoF object trajectories,
recognize category instances in object configurations via accumulator
voting, and predict poses of missing objects by inverting the learned
spatial relations.
"""

from . import errors
from .core import (
    DemonstrationDataset,
    ObjectId,
    ObjectState,
    Participant,
    RecognitionParams,
    RecognitionResult,
    RelativePoseSample,
    SingleIsm,
    Trajectory,
    learn_single_ism,
    orientation_compliance,
    position_compliance,
    recognize_single_ism,
)
from .estimator import SceneRecognizer
from .geometry import (
    Pose,
    compose,
    invert,
    orientation_angle,
    position_distance,
    relative,
)
from .prediction import (
    IsmPath,
    PredictionCloud,
    compute_shortest_paths,
    generate_cloud_of_pose_predictions,
    predict_pose,
)
from .topology import (
    PlaceholderRef,
    RelationTopology,
    StarTopology,
    TopologySearchParams,
    complete_topology,
    partition_into_stars,
    select_topology,
    star_topology,
)
from .tree import (
    IsmTree,
    SceneInstance,
    assemble_instances,
    evaluate_isms_in_tree,
    generate_ism_tree,
    learn_tree_from_topology,
    recognize_scene,
)

__version__ = "0.1.0"

__all__ = [
    "DemonstrationDataset",
    "IsmPath",
    "IsmTree",
    "ObjectId",
    "ObjectState",
    "Participant",
    "PlaceholderRef",
    "Pose",
    "PredictionCloud",
    "RecognitionParams",
    "RecognitionResult",
    "RelationTopology",
    "RelativePoseSample",
    "SceneInstance",
    "SceneRecognizer",
    "SingleIsm",
    "StarTopology",
    "TopologySearchParams",
    "Trajectory",
    "assemble_instances",
    "complete_topology",
    "compose",
    "compute_shortest_paths",
    "errors",
    "evaluate_isms_in_tree",
    "generate_cloud_of_pose_predictions",
    "generate_ism_tree",
    "invert",
    "learn_single_ism",
    "learn_tree_from_topology",
    "orientation_angle",
    "orientation_compliance",
    "partition_into_stars",
    "position_compliance",
    "position_distance",
    "predict_pose",
    "relative",
    "recognize_scene",
    "recognize_single_ism",
    "select_topology",
    "star_topology",
]
