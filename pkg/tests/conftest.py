import numpy as np
import pytest

from fracspec.graph import build_graph


@pytest.fixture
def k3():
    return build_graph("abc", [("a", "b"), ("b", "c"), ("a", "c")], {v: 1 / 3 for v in "abc"}, [1.0, 1.0, 1.0])


def random_graph(rng, n):
    """Random connected simple graph: a spanning path plus extra chords."""
    perm = rng.permutation(n)
    edges = {tuple(sorted((int(perm[i]), int(perm[i + 1])))) for i in range(n - 1)}
    for _ in range(rng.integers(0, n * 2)):
        u, v = rng.choice(n, 2, replace=False)
        edges.add(tuple(sorted((int(u), int(v)))))
    edges = sorted(edges)
    return build_graph(range(n), edges, rng.uniform(0.1, 3.0, n), rng.uniform(0.1, 3.0, len(edges)))
