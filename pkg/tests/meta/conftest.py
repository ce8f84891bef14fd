import numpy as np
import pytest

from robust_amc.tasks import TaskLibrary
from tests._toys import toy_library as _toy_library


@pytest.fixture(scope="module")
def toy_library() -> TaskLibrary:
    return _toy_library()


@pytest.fixture
def logistic_tasks(rng):
    """Two-parameter logistic regression tasks ``(support, query)`` of ``(x, y)``, y ∈ {±1}."""

    def draw(n: int, w: np.ndarray):
        x = rng.normal(size=(n, 2))
        y = np.where(x @ w + 0.3 * rng.normal(size=n) > 0, 1.0, -1.0)
        return x, y

    out = []
    for w in (np.array([1.0, -0.5]), np.array([0.3, 1.2])):
        out.append((draw(12, w), draw(20, w)))
    return out
