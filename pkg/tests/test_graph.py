import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_graph
from fracspec.errors import DuplicateEdge, GraphError, LoopEdge, NonPositiveWeight
from fracspec.graph import (WeightedGraph, apply_laplacian, build_graph, energy, laplacian,
                            n_components, spectrum, stats)

seeds = st.integers(0, 2**32 - 1)


def test_k3_is_valid(k3):
    assert k3.n_vertices == 3 and k3.n_edges == 3


def test_rejects_loop():
    with pytest.raises(LoopEdge):
        build_graph("ab", [("a", "a")], [1, 1], [1])


def test_rejects_zero_weight():
    with pytest.raises(NonPositiveWeight):
        build_graph("abc", [("a", "b"), ("b", "c")], [1, 1, 1], [1.0, 0.0])


def test_rejects_multi_edge_either_direction():
    with pytest.raises(DuplicateEdge):
        build_graph("ab", [("a", "b"), ("b", "a")], [1, 1], [1, 1])


def test_rejects_unknown_vertex():
    with pytest.raises(GraphError):
        build_graph("ab", [("a", "z")], [1, 1], [1])


def test_energy_examples(k3):
    assert energy(k3, [1, 1, 1]) == 0
    assert energy(k3, [1, 0, 0]) == pytest.approx(2.0)
    p2 = build_graph(range(3), [(0, 1), (1, 2)], [1, 1, 1], [4.0, 4.0])
    assert energy(p2, [0, 1, 2]) == pytest.approx(8.0)


def test_energy_complex(k3):
    assert energy(k3, np.array([1j, 0, 0])) == pytest.approx(2.0)


def test_k3_spectrum(k3):
    np.testing.assert_allclose(spectrum(k3), [0, 9, 9], atol=1e-12)


def test_interval_level1_spectrum():
    g = build_graph(range(3), [(0, 1), (1, 2)], [0.25, 0.5, 0.25], [2.0, 2.0])
    np.testing.assert_allclose(spectrum(g), [0, 8, 16], atol=1e-12)


def test_disconnected_zero_multiplicity():
    g = build_graph(range(4), [(0, 1), (2, 3)], [1] * 4, [1, 1])
    lam = spectrum(g)
    assert np.count_nonzero(lam == 0.0) == 2
    assert n_components(g) == 2


def test_kernel_is_snapped_to_exact_zero(k3):
    assert spectrum(k3)[0] == 0.0


def test_sparse_path_matches_dense():
    g = random_graph(np.random.default_rng(4), 40)
    np.testing.assert_allclose(spectrum(g, k=6, sparse=True), spectrum(g)[:6], rtol=1e-8, atol=1e-10)
    with pytest.raises(ValueError):
        spectrum(g, sparse=True)


def test_stats_examples(k3):
    s = stats(k3)
    np.testing.assert_allclose(s.rho, 6.0)
    assert s.d_inf == 2 and s.c_mu == 1 and s.c_gamma == 1
    single = build_graph("ab", [("a", "b")], [1, 1], [1])
    assert stats(single).max_inv_rel_weight == 1


def test_apply_laplacian_by_hand(k3):
    # (Delta f)(a) = 3 * ((1-0) + (1-0))
    np.testing.assert_allclose(apply_laplacian(k3, [1, 0, 0]), [6, -3, -3])


def test_json_roundtrip():
    g = build_graph([("x", 0), ("x", 1), "y"], [(("x", 0), ("x", 1)), (("x", 1), "y")], [1, 2, 3], [0.5, 1.5])
    doc = json.loads(json.dumps(g.to_json()))
    assert set(doc) >= {"vertices", "edges", "mu"}
    back = WeightedGraph.from_json(doc)
    assert back.vertices == g.vertices
    np.testing.assert_array_equal(back.mu, g.mu)
    np.testing.assert_array_equal(back.gamma, g.gamma)


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(2, 12))
def test_energy_is_quadratic_form_of_laplacian(seed, n):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    f = rng.standard_normal(n)
    inner = float(np.sum(f * apply_laplacian(g, f) * g.mu))
    assert energy(g, f) == pytest.approx(inner, rel=1e-12, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 12))
def test_spectrum_bounded_by_twice_max_relative_weight(seed, n):
    g = random_graph(np.random.default_rng(seed), n)
    lam = spectrum(g)
    assert lam[0] == 0.0 and np.all(lam >= 0)
    assert lam[-1] <= 2 * stats(g).rho_inf * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 12))
def test_relative_weight_inequalities(seed, n):
    checks = stats(random_graph(np.random.default_rng(seed), n)).check_invariants()
    assert all(checks.values()), checks


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 12), st.floats(1e-3, 1e3))
def test_spectrum_invariant_under_joint_scaling(seed, n, s):
    g = random_graph(np.random.default_rng(seed), n)
    a, b = spectrum(g), spectrum(g.scaled(s))
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12 * a[-1])


def test_laplacian_pair_shapes(k3):
    lap, mu = laplacian(k3)
    assert lap.shape == (3, 3)
    np.testing.assert_allclose(lap.sum(axis=1), 0)
    np.testing.assert_array_equal(mu, [1 / 3] * 3)
