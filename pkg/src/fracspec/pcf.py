"""Combinatorial pcf self-similar structures and their approximating weighted graphs.

Vertices of the level-``m`` graph are addressed by ``(word, a)``, the image
``F_word(q_a)`` of boundary point ``q_a``.  The boundary point ``q_a`` is taken
to be the fixed point of ``F_a``, so ``F_w(q_a) = F_{w a}(q_a)`` and the
vertex sets are nested.  All geometry is combinatorial; ``theta`` only enters
scaling formulas.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
import json

import numpy as np
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import (CompatibilityViolation, ConfigError, InconsistentGluing, SingularSystem,
                     UnknownPreset)
from .graph import build_graph, energy, laplacian, n_components


def as_number(x):
    """Exact ``Fraction`` for ints, fractions, decimal/rational strings and finite floats.

    Floats go through ``str`` so ``0.6`` becomes ``3/5``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ConfigError("boolean is not a number")
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class PcfSystem:
    N: int
    N0: int
    theta: Fraction
    r: Fraction
    gamma0: tuple
    gluing: tuple
    name: str = "custom"
    boundary_edges: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", as_number(self.theta))
        object.__setattr__(self, "r", as_number(self.r))
        object.__setattr__(self, "boundary_edges", tuple(combinations(range(self.N0), 2)))
        object.__setattr__(self, "gamma0", tuple(as_number(g) for g in self.gamma0))
        object.__setattr__(self, "gluing", tuple(tuple(int(x) for x in rule) for rule in self.gluing))
        self._validate()

    def _validate(self):
        if not (isinstance(self.N, int) and isinstance(self.N0, int)):
            raise ConfigError("N and N0 must be integers")
        if not 2 <= self.N0 <= self.N:
            raise ConfigError("need 2 <= N0 <= N")
        if not (0 < self.theta < 1 and 0 < self.r < 1):
            raise ConfigError("theta and r must lie in (0, 1)")
        if len(self.gamma0) != len(self.boundary_edges):
            raise ConfigError(f"gamma0 needs {len(self.boundary_edges)} entries (complete graph on N0 vertices)")
        if any(g <= 0 for g in self.gamma0):
            raise ConfigError("gamma0 entries must be positive")
        sums = self.inverse_weight_sums()
        if len(set(sums)) != 1:
            raise ConfigError(f"boundary is not symmetric: sum of 1/gamma0 per vertex = {sums}")
        for rule in self.gluing:
            if len(rule) != 4:
                raise InconsistentGluing(f"gluing rule {rule} must be [j, a, j2, b]")
            j, a, j2, b = rule
            if j == j2:
                raise InconsistentGluing(f"gluing rule {rule} identifies points of one cell")
            if not (0 <= j < self.N and 0 <= j2 < self.N and 0 <= a < self.N0 and 0 <= b < self.N0):
                raise InconsistentGluing(f"gluing rule {rule} out of range")

    def inverse_weight_sums(self):
        sums = [Fraction(0)] * self.N0
        for (a, b), g in zip(self.boundary_edges, self.gamma0):
            sums[a] += 1 / g
            sums[b] += 1 / g
        return sums

    @property
    def C0(self):
        return self.inverse_weight_sums()[0]

    @property
    def C1(self):
        return min(self.gamma0)

    @property
    def C2(self):
        return max(self.gamma0)

    def with_r(self, r):
        return PcfSystem(self.N, self.N0, self.theta, r, self.gamma0, self.gluing, self.name)

    def to_json(self):
        return {"N": self.N, "N0": self.N0, "theta": str(self.theta), "r": str(self.r),
                "gamma0": [str(g) for g in self.gamma0], "gluing": [list(g) for g in self.gluing]}

    @classmethod
    def from_json(cls, data, name="custom"):
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(int(data["N"]), int(data["N0"]), data["theta"], data["r"],
                       tuple(data["gamma0"]), tuple(tuple(g) for g in data["gluing"]), name)
        except KeyError as exc:
            raise ConfigError(f"pcf config is missing {exc.args[0]!r}") from None


PRESETS = {
    "interval": dict(N=2, N0=2, theta="1/2", r="1/2", gamma0=(1,), gluing=((0, 1, 1, 0),)),
    "sierpinski": dict(N=3, N0=3, theta="1/2", r="3/5", gamma0=(1, 1, 1),
                       gluing=((0, 1, 1, 0), (0, 2, 2, 0), (1, 2, 2, 1))),
}


def preset(name):
    try:
        spec = PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
    return PcfSystem(name=name, **spec)


@dataclass(frozen=True, eq=False)
class LevelGraph:
    system: PcfSystem
    m: int
    graph: object
    cell_count: np.ndarray
    edge_ancestor: np.ndarray
    edge_word: np.ndarray
    address_label: np.ndarray

    def vertex_of(self, word, a):
        """Canonical vertex index of address ``(word, a)``."""
        return int(self._vindex[self.address_label[_address_index(self.system, word, a)]])

    @property
    def _vindex(self):
        vi = self.__dict__.get("_vi")
        if vi is None:
            reps = np.unique(self.address_label)
            vi = np.full(self.address_label.shape[0], -1, dtype=np.int64)
            vi[reps] = np.arange(reps.size)
            object.__setattr__(self, "_vi", vi)
        return vi

    @property
    def N1(self):
        return int(self.cell_count.max())


def _address_index(sys, word, a):
    idx = 0
    for x in word:
        idx = idx * sys.N + x
    return idx * sys.N0 + a


def _repunit(a, length, N):
    # integer whose base-N digits are `length` copies of a
    return a * (N ** length - 1) // (N - 1)


def _word(idx, m, N):
    out = []
    for _ in range(m):
        idx, d = divmod(idx, N)
        out.append(d)
    return tuple(reversed(out))


def level_graph(sys, m):
    if m < 0:
        raise ConfigError("generation m must be >= 0")
    N, N0 = sys.N, sys.N0
    n_words = N ** m
    n_addr = n_words * N0
    pa, pb = [], []
    for k in range(m):
        tail_len = m - k - 1
        prefixes = np.arange(N ** k, dtype=np.int64) * N ** (m - k)
        for j, a, j2, b in sys.gluing:
            wa = prefixes + j * N ** tail_len + _repunit(a, tail_len, N)
            wb = prefixes + j2 * N ** tail_len + _repunit(b, tail_len, N)
            pa.append(wa * N0 + a)
            pb.append(wb * N0 + b)
    pa = np.concatenate(pa) if pa else np.empty(0, dtype=np.int64)
    pb = np.concatenate(pb) if pb else np.empty(0, dtype=np.int64)
    label = _kernels.min_label_components(n_addr, pa, pb)

    reps, inverse = np.unique(label, return_inverse=True)
    words = np.repeat(np.arange(n_words), N0)
    cell_count = np.bincount(inverse, minlength=reps.size)
    distinct = np.unique(inverse * n_words + words).size
    if distinct != n_addr:
        raise InconsistentGluing(f"level {m}: a cell has two boundary points identified")

    e_words = np.repeat(np.arange(n_words), len(sys.boundary_edges))
    e_anc = np.tile(np.arange(len(sys.boundary_edges)), n_words)
    ea = np.array([a for a, _ in sys.boundary_edges], dtype=np.int64)[e_anc]
    eb = np.array([b for _, b in sys.boundary_edges], dtype=np.int64)[e_anc]
    tail = inverse[e_words * N0 + ea]
    head = inverse[e_words * N0 + eb]
    if np.any(tail == head):
        raise InconsistentGluing(f"level {m}: gluing collapses an edge to a loop")
    key = np.minimum(tail, head) * reps.size + np.maximum(tail, head)
    if np.unique(key).size != key.size:
        raise InconsistentGluing(f"level {m}: gluing produces a multiple edge")

    vertices = tuple((_word(int(rep) // N0, m, N), int(rep) % N0) for rep in reps)
    mu = cell_count / (N0 * N ** m)
    scale = float(sys.r ** -m)
    gamma0 = np.array([float(g) for g in sys.gamma0])
    gamma = scale * gamma0[e_anc]
    edges = [(vertices[t], vertices[h]) for t, h in zip(tail, head)]
    g = build_graph(vertices, edges, mu, gamma)
    if m == 1 and n_components(g) != 1:
        raise InconsistentGluing("gluing rules leave G_1 disconnected")
    return LevelGraph(sys, m, g, cell_count, e_anc, e_words, label)


def harmonic_extension(sys, m, phi, _levels=None):
    """Energy-minimising extension of ``phi`` from ``V_m`` to ``V_{m+1}``."""
    coarse, fine = _levels or (level_graph(sys, m), level_graph(sys, m + 1))
    phi = np.asarray(phi)
    if phi.shape[0] != coarse.graph.n_vertices:
        raise ConfigError("phi must be defined on every vertex of V_m")
    emb = _embedding(coarse, fine)
    n = fine.graph.n_vertices
    interior = np.setdiff1d(np.arange(n), emb)
    lap, _ = laplacian(fine.graph)
    lap = lap.tocsr()
    f = np.zeros(n, dtype=np.result_type(phi.dtype, float))
    f[emb] = phi
    if interior.size:
        a_ii = lap[interior][:, interior].tocsc()
        rhs = -(lap[interior][:, emb] @ phi)
        try:
            f[interior] = spla.spsolve(a_ii, rhs)
        except RuntimeError as exc:  # pragma: no cover - defensive
            raise SingularSystem(str(exc)) from exc
        if not np.all(np.isfinite(f)):
            raise SingularSystem("harmonic extension system is singular")
    return f


def _embedding(coarse, fine):
    return np.array([fine.vertex_of(w + (a,), a) for w, a in coarse.graph.vertices], dtype=np.int64)


def cell_restriction(fine, coarse, j):
    """Indices in ``fine`` of ``F_j(v)`` for each vertex ``v`` of ``coarse`` (one generation lower)."""
    return np.array([fine.vertex_of((j,) + w, a) for w, a in coarse.graph.vertices], dtype=np.int64)


@dataclass(frozen=True)
class CompatibilityReport:
    m: int
    trials: int
    worst_compatibility: float
    worst_self_similarity: float


def verify_compatibility(sys, m, trials=50, rng=None, rtol=1e-10):
    """Check energy compatibility under harmonic extension and self-similarity with ratio ``r``."""
    rng = np.random.default_rng(rng)
    coarse, fine = level_graph(sys, m), level_graph(sys, m + 1)
    emb = _embedding(coarse, fine)
    cells = [cell_restriction(fine, coarse, j) for j in range(sys.N)]
    inv_r = float(1 / sys.r)
    worst_c = worst_s = 0.0
    for _ in range(trials):
        phi = rng.standard_normal(coarse.graph.n_vertices)
        ext = harmonic_extension(sys, m, phi, _levels=(coarse, fine))
        assert np.allclose(ext[emb], phi)
        e0, e1 = energy(coarse.graph, phi), energy(fine.graph, ext)
        worst_c = max(worst_c, abs(e1 - e0) / max(abs(e0), 1e-300))
        f = rng.standard_normal(fine.graph.n_vertices)
        lhs = energy(fine.graph, f)
        rhs = sum(inv_r * energy(coarse.graph, f[c]) for c in cells)
        worst_s = max(worst_s, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    if worst_c > rtol:
        raise CompatibilityViolation(f"energy not preserved by harmonic extension at level {m}", worst_c)
    if worst_s > rtol:
        raise CompatibilityViolation(f"self-similarity with r={sys.r} fails at level {m}", worst_s)
    return CompatibilityReport(m, trials, worst_c, worst_s)
