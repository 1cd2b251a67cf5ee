from __future__ import annotations

import numpy as np
import pytest

from ismtrees.geometry import Pose


def random_pose(rng: np.random.Generator, span: float = 1.0) -> Pose:
    """Uniform position in [-span, span]^3, uniform random unit quaternion."""
    position = rng.uniform(-span, span, size=3)
    quat = rng.normal(size=4)
    return Pose(position, quat / np.linalg.norm(quat))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
