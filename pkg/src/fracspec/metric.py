"""Metric graphs: compatible edge lengths, P1 finite elements, Kirchhoff spectra, subdivision."""
from dataclasses import dataclass
import json
import math

import numpy as np
import scipy.sparse as sp
import sympy

from . import _kernels
from .errors import BadPartition, ConfigError, IncompatibleWeights, InvalidRatio
from .graph import build_graph
from .linalg import DENSE_LIMIT, gen_eigh

CASES = ("geometric", "inverse-weight", "unit-tau", "custom")


@dataclass(frozen=True, eq=False)
class MetricGraph:
    vertices: tuple
    tail: np.ndarray
    head: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=float)
        if lengths.shape != (len(self.tail),) or not np.all(lengths > 0):
            raise ConfigError("edge lengths must be positive, one per edge")
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def from_graph(cls, g, lengths):
        return cls(g.vertices, g.tail, g.head, lengths)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.tail)

    @property
    def ell0(self):
        return float(self.lengths.min())

    @property
    def ell_inf(self):
        return float(self.lengths.max())

    def degree(self):
        return np.bincount(np.concatenate([self.tail, self.head]), minlength=self.n_vertices)

    def vertex_measure(self):
        """``nu(v) = 1/2 sum_{e at v} l_e``."""
        half = 0.5 * self.lengths
        return (np.bincount(self.tail, weights=half, minlength=self.n_vertices)
                + np.bincount(self.head, weights=half, minlength=self.n_vertices))

    def to_json(self, graph=None):
        """Metric graph JSON: the graph JSON (``graph`` if given) plus ``lengths`` keyed by edge index."""
        if graph is not None:
            out = graph.to_json()
        else:
            from .graph import _jsonable
            out = {"vertices": [_jsonable(v) for v in self.vertices],
                   "edges": [[_jsonable(self.vertices[a]), _jsonable(self.vertices[b]), 1.0 / l]
                             for a, b, l in zip(self.tail, self.head, self.lengths)]}
        out["lengths"] = {str(k): float(l) for k, l in enumerate(self.lengths)}
        return out

    @classmethod
    def from_json(cls, data):
        from .graph import _unjson
        if isinstance(data, str):
            data = json.loads(data)
        vertices = tuple(_unjson(v) for v in data["vertices"])
        index = {v: i for i, v in enumerate(vertices)}
        tail = np.array([index[_unjson(e[0])] for e in data["edges"]], dtype=np.int64)
        head = np.array([index[_unjson(e[1])] for e in data["edges"]], dtype=np.int64)
        lengths = [data["lengths"][str(k)] for k in range(len(tail))]
        return cls(vertices, tail, head, lengths)


@dataclass(frozen=True)
class ScalingPlan:
    """Length/scale parameters of generation ``m``; ``*_exact`` fields are sympy numbers."""

    case: str
    m: int
    Lambda_exact: object
    ell00_exact: object
    c2_exact: object
    tau_exact: object

    @property
    def Lambda(self):
        return float(self.Lambda_exact)

    @property
    def ell00(self):
        return float(self.ell00_exact)

    @property
    def c2(self):
        return float(self.c2_exact)

    @property
    def c(self):
        return math.sqrt(self.c2)

    @property
    def tau(self):
        return float(self.tau_exact)

    def to_json(self):
        return {"case": self.case, "m": self.m, "Lambda": self.Lambda, "ell00": self.ell00,
                "c": self.c, "c2": self.c2, "tau": self.tau,
                "tau_exact": str(self.tau_exact), "c2_exact": str(self.c2_exact)}


def scaling_parameters(sys, case="geometric", Lambda=None, ell00=None):
    """Exact ``(Lambda, ell00)`` for one of the named cases (or ``custom``)."""
    r, N = sympy.Rational(sys.r), sympy.Integer(sys.N)
    C0N0 = sympy.Rational(sys.C0) * sys.N0
    if case == "geometric":
        lam = sympy.Rational(sys.theta)
        l00 = sympy.nsimplify(ell00) if ell00 is not None else sympy.Integer(1)
    elif case == "inverse-weight":
        lam, l00 = r, sympy.Integer(1)
    elif case == "unit-tau":
        lam, l00 = sympy.sqrt(r / N), sympy.sqrt(2 / C0N0)
    elif case == "custom":
        if Lambda is None:
            raise ConfigError("custom case needs Lambda")
        lam = sympy.nsimplify(Lambda)
        l00 = sympy.nsimplify(ell00) if ell00 is not None else sympy.Integer(1)
    else:
        raise ConfigError(f"unknown case {case!r}; expected one of {CASES}")
    if not (0 < lam < 1):
        raise InvalidRatio(f"Lambda={lam} must lie in (0, 1)")
    if not l00 > 0:
        raise ConfigError("ell00 must be positive")
    return lam, l00


def scaling_plan(sys, m, case="geometric", Lambda=None, ell00=None):
    lam, l00 = scaling_parameters(sys, case, Lambda, ell00)
    r, N = sympy.Rational(sys.r), sympy.Integer(sys.N)
    C0N0 = sympy.Rational(sys.C0) * sys.N0
    c2 = sympy.nsimplify(2 / (l00 * C0N0 * (N * lam) ** m))
    tau = sympy.nsimplify(l00 ** 2 * C0N0 / 2 * (N * lam ** 2 / r) ** m)
    return ScalingPlan(case, m, lam, l00, sympy.simplify(c2), sympy.simplify(tau))


def assign_lengths(level, case="geometric", Lambda=None, ell00=None, rtol=1e-12):
    """Compatible metric graph for a level graph plus its scaling plan."""
    sys = level.system
    plan = scaling_plan(sys, level.m, case, Lambda, ell00)
    gamma0 = np.array([float(g) for g in sys.gamma0])
    lengths = plan.ell00 / gamma0[level.edge_ancestor] * plan.Lambda ** level.m
    mg = MetricGraph.from_graph(level.graph, lengths)
    check_compatibility(level.graph, mg, plan.c2, plan.tau, rtol=rtol)
    return mg, plan


def check_compatibility(g, mg, c2, tau, rtol=1e-10):
    """Raise unless ``nu/mu == 1/c^2`` per vertex and ``l*gamma == c^2 tau`` per edge."""
    ratio = mg.vertex_measure() / g.mu
    if np.max(np.abs(ratio * c2 - 1.0)) > rtol:
        raise IncompatibleWeights(f"nu/mu varies: range [{ratio.min()}, {ratio.max()}], expected {1 / c2}")
    prod = mg.lengths * g.gamma
    if np.max(np.abs(prod / (c2 * tau) - 1.0)) > rtol:
        raise IncompatibleWeights("l_e * gamma_e differs from c^2 tau")
    return ratio, prod


def compatible_factors(g, mg):
    """``(c^2, tau)`` read off a compatible pair (no validation)."""
    c2 = float(np.mean(g.mu / mg.vertex_measure()))
    tau = float(np.mean(mg.lengths * g.gamma)) / c2
    return c2, tau


@dataclass(frozen=True, eq=False)
class FemDiscretization:
    """Conforming P1 space on a metric graph.  Vertex DOFs come first, in vertex order."""

    mg: MetricGraph
    elements: np.ndarray  # elements per edge
    edge_nodes: tuple     # global node ids along each edge, tail to head
    node_info: np.ndarray  # (edge index, position along edge) per node; vertices get (-1, 0)
    ei: np.ndarray
    ej: np.ndarray
    h: np.ndarray
    A: sp.csr_matrix
    B: sp.csr_matrix

    @property
    def n_dof(self):
        return self.A.shape[0]

    @property
    def vertex_dofs(self):
        return np.arange(self.mg.n_vertices)

    @property
    def mesh_h(self):
        return float(self.h.max())

    def weighted_mass(self, w):
        """Mass matrix of ``int w u v`` for an affine-per-element weight with nodal values ``w``."""
        w = np.asarray(w, dtype=float)
        rows, cols, _, _, bw = _kernels.p1_triplets(self.ei, self.ej, self.h, w[self.ei], w[self.ej])
        n = self.n_dof
        return sp.coo_matrix((bw, (rows, cols)), shape=(n, n)).tocsr()

    def refined(self):
        """Same metric graph with every element halved."""
        return fem_discretize(self.mg, elements=2 * self.elements)

    def interpolate(self, fn):
        """Nodal values of ``fn(edge, x)`` (x measured from the tail); vertices take ``fn`` at an endpoint."""
        out = np.empty(self.n_dof)
        for e, nodes in enumerate(self.edge_nodes):
            x = np.linspace(0.0, self.mg.lengths[e], len(nodes))
            out[nodes] = fn(e, x)
        return out


def default_elements(mg, h_target=None, minimum=8):
    if h_target is None:
        h_target = mg.ell0 / minimum
    if h_target <= 0:
        raise ConfigError("h_target must be positive")
    return np.maximum(minimum, np.ceil(mg.lengths / h_target - 1e-9)).astype(np.int64)


def fem_discretize(mg, nodes_per_edge=None, *, elements=None, h_target=None):
    """P1 discretisation of the metric graph energy ``sum_e int |u_e'|^2``.

    Give either ``nodes_per_edge`` (interior nodes, >= 2), ``elements`` per
    edge, or ``h_target``; the default is ``max(8, ceil(l_e / h_target))``
    elements per edge with ``h_target = l_0 / 8``.
    """
    if nodes_per_edge is not None:
        npe = np.broadcast_to(np.asarray(nodes_per_edge, dtype=np.int64), (mg.n_edges,))
        if np.any(npe < 2):
            raise ConfigError("nodes_per_edge must be >= 2")
        elements = npe + 1
    elif elements is not None:
        elements = np.broadcast_to(np.asarray(elements, dtype=np.int64), (mg.n_edges,)).copy()
        if np.any(elements < 1):
            raise ConfigError("need at least one element per edge")
    else:
        elements = default_elements(mg, h_target)
    nv = mg.n_vertices
    next_id = nv
    edge_nodes, ei, ej, hs = [], [], [], []
    wx_edge = [np.full(nv, -1)]
    wx_pos = [np.zeros(nv)]
    for e in range(mg.n_edges):
        n = int(elements[e])
        interior = np.arange(next_id, next_id + n - 1)
        next_id += n - 1
        nodes = np.concatenate([[mg.tail[e]], interior, [mg.head[e]]]).astype(np.int64)
        edge_nodes.append(nodes)
        ei.append(nodes[:-1])
        ej.append(nodes[1:])
        hs.append(np.full(n, mg.lengths[e] / n))
        wx_edge.append(np.full(n - 1, e))
        wx_pos.append(np.arange(1, n) * mg.lengths[e] / n)
    ei, ej, hs = np.concatenate(ei), np.concatenate(ej), np.concatenate(hs)
    ones = np.ones_like(hs)
    rows, cols, a, b, _ = _kernels.p1_triplets(ei, ej, hs, ones, ones)
    shape = (next_id, next_id)
    A = sp.coo_matrix((a, (rows, cols)), shape=shape).tocsr()
    B = sp.coo_matrix((b, (rows, cols)), shape=shape).tocsr()
    node_info = np.stack([np.concatenate(wx_edge).astype(float), np.concatenate(wx_pos)], axis=1)
    return FemDiscretization(mg, np.asarray(elements), tuple(edge_nodes), node_info, ei, ej, hs, A, B)


def kirchhoff_spectrum(fem, k=None, tau=1.0, sparse=None, richardson=False):
    """Smallest ``k`` eigenvalues of ``tau * A x = lam B x``.

    With ``richardson`` the result is ``(4 lam_{h/2} - lam_h) / 3`` using the
    halved mesh.
    """
    if k is not None and k > fem.n_dof:
        raise ConfigError(f"k={k} exceeds the {fem.n_dof} degrees of freedom")
    if sparse is None:
        sparse = fem.n_dof > DENSE_LIMIT // 4
    scale = tau / fem.mesh_h ** 2
    lam = gen_eigh(tau * fem.A, fem.B, k=k, sparse=sparse and k is not None, snap_scale=scale)
    if not richardson:
        return lam
    fine = kirchhoff_spectrum(fem.refined(), k=len(lam), tau=tau, sparse=sparse)
    return np.where(lam == 0.0, 0.0, (4.0 * fine - lam) / 3.0)


def harmonic_partition(fem):
    """Columns ``psi_v`` (nodal vectors, affine on edges) and ``nu(v) = int psi_v``."""
    mg = fem.mg
    rows, cols, vals = [np.arange(mg.n_vertices)], [np.arange(mg.n_vertices)], [np.ones(mg.n_vertices)]
    for e, nodes in enumerate(fem.edge_nodes):
        inner = nodes[1:-1]
        t = np.arange(1, len(nodes) - 1) / (len(nodes) - 1)
        rows += [inner, inner]
        cols += [np.full(inner.size, mg.tail[e]), np.full(inner.size, mg.head[e])]
        vals += [1.0 - t, t]
    psi = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(fem.n_dof, mg.n_vertices)).tocsr()
    nu = np.asarray((fem.B @ psi).sum(axis=0)).ravel()
    return psi, nu


def star_graph(lengths):
    """Star with leaves ``0..d-1`` and centre ``"c"``; every edge runs leaf -> centre."""
    lengths = np.asarray(lengths, dtype=float)
    d = lengths.size
    if d < 1:
        raise ConfigError("a star needs at least one edge")
    vertices = tuple(range(d)) + ("c",)
    return MetricGraph(vertices, np.arange(d), np.full(d, d), lengths)


def weighted_star_lambda2(lengths, elements=64, richardson=True):
    """Second eigenvalues of the star with and without the weight ``psi`` of its centre.

    Returns ``(weighted, unweighted)``.
    """
    mg = star_graph(lengths)
    return _star_pair(fem_discretize(mg, elements=elements), richardson)


def _star_pair(fem, richardson):
    def solve(f):
        psi, _ = harmonic_partition(f)
        centre = psi[:, f.mg.n_vertices - 1].toarray().ravel()
        bw = f.weighted_mass(centre)
        weighted = gen_eigh(f.A, bw, k=2, snap_scale=1.0 / f.mesh_h ** 2)[1]
        plain = gen_eigh(f.A, f.B, k=2, snap_scale=1.0 / f.mesh_h ** 2)[1]
        return np.array([weighted, plain])

    coarse = solve(fem)
    if not richardson:
        return tuple(float(x) for x in coarse)
    fine = solve(fem.refined())
    return tuple(float(x) for x in (4.0 * fine - coarse) / 3.0)


def subdivide(mg, parts_per_edge, rtol=1e-12):
    """Refine every edge by degree-2 vertices.

    ``parts_per_edge`` is an int (equal parts on every edge), a sequence of
    ints, or a sequence of sub-length lists.  Returns the metric subdivision
    graph and its compatible weighted graph (``mu = half incident length``,
    ``gamma = 1/l``; ``c = tau = 1``).
    """
    if np.isscalar(parts_per_edge):
        parts_per_edge = [int(parts_per_edge)] * mg.n_edges
    if len(parts_per_edge) != mg.n_edges:
        raise BadPartition("one partition per edge required")
    vertices = list(mg.vertices)
    tail, head, lengths = [], [], []
    for e, part in enumerate(parts_per_edge):
        le = mg.lengths[e]
        if np.isscalar(part):
            if int(part) != part or part < 1:
                raise BadPartition(f"edge {e}: parts must be a positive integer")
            pieces = np.full(int(part), le / int(part))
        else:
            pieces = np.asarray(part, dtype=float)
            if pieces.size < 1 or np.any(pieces <= 0):
                raise BadPartition(f"edge {e}: sub-lengths must be positive")
            if abs(pieces.sum() - le) > rtol * max(le, 1.0) * pieces.size:
                raise BadPartition(f"edge {e}: sub-lengths sum to {pieces.sum()} not {le}")
        chain = [mg.tail[e]]
        for i in range(1, pieces.size):
            vertices.append(("sub", e, i))
            chain.append(len(vertices) - 1)
        chain.append(mg.head[e])
        tail += chain[:-1]
        head += chain[1:]
        lengths += list(pieces)
    sm = MetricGraph(tuple(vertices), np.array(tail, dtype=np.int64), np.array(head, dtype=np.int64), lengths)
    mu = sm.vertex_measure()
    sg = build_graph(sm.vertices, [(sm.vertices[a], sm.vertices[b]) for a, b in zip(sm.tail, sm.head)],
                     mu, 1.0 / sm.lengths)
    return sm, sg
