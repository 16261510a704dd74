import numpy as np
import pytest

from pottscert.builders import combined_example, counterexample_triangle, random_grid


@pytest.fixture
def triangle():
    return counterexample_triangle(0.1)


@pytest.fixture
def combined():
    return combined_example()


def small_random_instance(seed, n_max=6, k_max=3):
    """Connected random instance with a few nodes, for property tests."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, n_max + 1))
    k = int(rng.integers(2, k_max + 1))
    costs = rng.uniform(0.0, 4.0, size=(n, k))
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v, float(rng.uniform(0.2, 2.0))))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in [(a, b) for a, b, _ in edges] and rng.random() < 0.3:
                edges.append((u, v, float(rng.uniform(0.2, 2.0))))
    from pottscert.model import PottsInstance

    return PottsInstance(n, k, tuple(tuple(r) for r in costs), tuple(edges))
