import numpy as np
import pytest
from hypothesis import settings

from reconkm.instance import Instance
from reconkm.metrics import euclidean_distances

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_metric(m: int, seed: int, dim: int = 2) -> Instance:
    """F = C on random plane points: a shared Euclidean metric."""
    rng = np.random.default_rng(seed)
    P = rng.uniform(0, 10, size=(m, dim))
    D = euclidean_distances(P, P)
    return Instance(D, D)


def random_bipartite(n: int, m: int, seed: int) -> Instance:
    rng = np.random.default_rng(seed)
    F = rng.uniform(0, 10, size=(m, 2))
    C = rng.uniform(0, 10, size=(n, 2))
    return Instance(euclidean_distances(C, F), euclidean_distances(F, F))


@pytest.fixture
def line3():
    # points 0, 1, 2 on a line; clients are the facilities
    x = np.array([0.0, 1.0, 2.0])
    D = np.abs(x[:, None] - x[None, :])
    return Instance(D, D)
