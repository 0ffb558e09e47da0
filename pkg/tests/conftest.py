import numpy as np
import pytest

from fiva import Embedding, normalize


def random_unit(rng, dim):
    return normalize(rng.normal(size=dim))


def embedding_at_distance(center, distance, rng):
    """A unit embedding at an exact cosine distance from ``center``.

    Builds cos_target * center + sin_target * u with u a random direction
    orthogonal to center, so cos(center, result) == 1 - distance up to
    float rounding.
    """
    cos_target = 1.0 - distance
    raw = rng.normal(size=center.dim)
    raw -= np.dot(raw, center.values) * center.values
    u = raw / np.linalg.norm(raw)
    mixed = cos_target * center.values + np.sqrt(1.0 - cos_target**2) * u
    return Embedding(mixed / np.linalg.norm(mixed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
