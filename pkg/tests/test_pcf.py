from fractions import Fraction
import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracspec.errors import CompatibilityViolation, ConfigError, InconsistentGluing, UnknownPreset
from fracspec.graph import energy, n_components, stats
from fracspec.pcf import (PcfSystem, harmonic_extension, level_graph, preset,
                          verify_compatibility)


def test_presets():
    s = preset("sierpinski")
    assert (s.N, s.N0, s.theta, s.r, s.C0) == (3, 3, Fraction(1, 2), Fraction(3, 5), 2)
    i = preset("interval")
    assert (i.N, i.N0, i.theta, i.r, i.C0) == (2, 2, Fraction(1, 2), Fraction(1, 2), 1)
    with pytest.raises(UnknownPreset):
        preset("koch")


def test_config_roundtrip():
    s = preset("sierpinski")
    back = PcfSystem.from_json(json.loads(json.dumps(s.to_json())))
    assert (back.N, back.N0, back.r, back.gluing) == (s.N, s.N0, s.r, s.gluing)


@pytest.mark.parametrize("bad", [
    dict(r=1.5), dict(theta=0), dict(N0=4), dict(gamma0=[1, 1, 2]),
    dict(gluing=[[0, 1, 0, 0]]),
])
def test_invalid_systems(bad):
    doc = preset("sierpinski").to_json() | bad
    with pytest.raises(ConfigError):
        PcfSystem.from_json(doc)


def test_gluing_that_leaves_level_one_disconnected():
    doc = preset("sierpinski").to_json() | {"gluing": [[0, 1, 1, 0]]}
    with pytest.raises(InconsistentGluing):
        level_graph(PcfSystem.from_json(doc), 1)


def brute_sierpinski_vertices(m):
    """Enumerate all addresses and merge glued ones with a plain dict-based union."""
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            x = parent[x]
        return x

    pairs = ((0, 1, 1, 0), (0, 2, 2, 0), (1, 2, 2, 1))
    for word in itertools.product(range(3), repeat=m):
        for a in range(3):
            find((word, a))
    for k in range(m):
        for u in itertools.product(range(3), repeat=k):
            for j, a, j2, b in pairs:
                rest = m - k - 1
                x, y = (u + (j,) + (a,) * rest, a), (u + (j2,) + (b,) * rest, b)
                parent[find(x)] = find(y)
    return len({find(x) for x in list(parent)})


@pytest.mark.parametrize("m", range(0, 7))
def test_sierpinski_counts(m):
    lv = level_graph(preset("sierpinski"), m)
    assert lv.graph.n_vertices == 3 * (3**m + 1) // 2 == brute_sierpinski_vertices(m)
    assert lv.graph.n_edges == 3 ** (m + 1)
    assert lv.graph.mu.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("m", range(0, 7))
def test_interval_counts(m):
    lv = level_graph(preset("interval"), m)
    assert lv.graph.n_vertices == 2**m + 1 and lv.graph.n_edges == 2**m
    assert lv.graph.mu.sum() == pytest.approx(1.0, abs=1e-12)


def test_interval_level3_weights():
    g = level_graph(preset("interval"), 3).graph
    np.testing.assert_allclose(g.mu, [1 / 16] + [1 / 8] * 7 + [1 / 16])
    np.testing.assert_allclose(g.gamma, 8.0)


@pytest.mark.parametrize("name", ["sierpinski", "interval"])
def test_uniformity_constants(name):
    sys = preset(name)
    for m in range(1, 7):
        lv = level_graph(sys, m)
        st_ = stats(lv.graph)
        assert lv.N1 == 2
        assert st_.d_inf <= lv.N1 * (sys.N0 - 1)
        assert st_.c_mu <= lv.N1 + 1e-12
        assert st_.c_gamma <= float(sys.C2 / sys.C1) + 1e-12
        assert n_components(lv.graph) == 1


def test_sierpinski_inverse_relative_weight():
    # one cell per vertex at m=0, two from m=1 on
    assert stats(level_graph(preset("sierpinski"), 0).graph).max_inv_rel_weight == pytest.approx(1 / 3)
    for m in range(1, 6):
        st_ = stats(level_graph(preset("sierpinski"), m).graph)
        assert st_.max_inv_rel_weight == pytest.approx((2 / 3) * 0.2**m, rel=1e-12)


def test_vertices_use_smallest_address():
    lv = level_graph(preset("sierpinski"), 1)
    assert lv.graph.vertices[3] == ((1,), 1)
    # (1,0) and (0,1) are the same point; the smaller address names it
    assert lv.vertex_of((1,), 0) == lv.vertex_of((0,), 1) == 1


def test_one_fifth_two_fifths_rule():
    ext = harmonic_extension(preset("sierpinski"), 0, [1.0, 0.0, 0.0])
    lv = level_graph(preset("sierpinski"), 1)
    mid = {pair: ext[lv.vertex_of((i,), j)] for pair, (i, j) in
           {"01": (0, 1), "02": (0, 2), "12": (1, 2)}.items()}
    assert mid == pytest.approx({"01": 0.4, "02": 0.4, "12": 0.2}, abs=1e-14)


def test_interval_extension_stays_linear():
    sys = preset("interval")
    x = np.linspace(0, 1, 2**3 + 1)
    np.testing.assert_allclose(harmonic_extension(sys, 3, 2 * x - 1), 2 * np.linspace(0, 1, 17) - 1, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1e3, 1e3), st.integers(0, 3))
def test_constant_extends_to_constant(c, m):
    sys = preset("sierpinski")
    n = level_graph(sys, m).graph.n_vertices
    np.testing.assert_allclose(harmonic_extension(sys, m, np.full(n, c)), c, atol=1e-10 * max(1, abs(c)))


@pytest.mark.parametrize("m", range(4))
def test_sierpinski_compatible(m):
    rep = verify_compatibility(preset("sierpinski"), m, trials=50, rng=m)
    assert rep.worst_compatibility < 1e-10 and rep.worst_self_similarity < 1e-10


@pytest.mark.parametrize("m", range(6))
def test_interval_compatible(m):
    verify_compatibility(preset("interval"), m, trials=20, rng=m)


def test_wrong_renormalisation_is_caught():
    with pytest.raises(CompatibilityViolation) as exc:
        verify_compatibility(preset("sierpinski").with_r(Fraction(1, 2)), 1, trials=5, rng=0)
    assert exc.value.worst_defect > 0.1


def test_energy_scales_with_r_inverse():
    sys = preset("sierpinski")
    g1, g2 = level_graph(sys, 1).graph, level_graph(sys, 2).graph
    assert g2.gamma[0] / g1.gamma[0] == pytest.approx(5 / 3)
    assert energy(g1, np.ones(6)) == 0
