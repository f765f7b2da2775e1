import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gibbs_boundary.datagen import Dataset
from gibbs_boundary.spline import TWO_PI, KnotVector

settings.register_profile(
    "default", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_knots(rng, D=None) -> KnotVector:
    """Random knot vector with strictly ordered, well separated free knots."""
    D = int(rng.integers(4, 25)) if D is None else D
    while True:
        free = np.sort(rng.uniform(0.0, TWO_PI, D - 2))
        gaps = np.diff(np.concatenate([[0.0], free, [TWO_PI]]))
        if gaps.min() > 1e-3:
            return KnotVector.from_free(free)


def polar_points(theta, r):
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def circle_data():
    """Noiseless circle of radius 0.25: y=+1 strictly inside, -1 outside."""
    g = np.random.default_rng(5)
    x = g.uniform(-0.5, 0.5, size=(4000, 2))
    r = np.hypot(x[:, 0], x[:, 1])
    keep = np.abs(r - 0.25) > 0.01
    x, r = x[keep], r[keep]
    return Dataset(x, np.where(r < 0.25, 1.0, -1.0))
