"""Weighted discrete graphs: energy form, Laplacian, spectrum and uniformity statistics."""
from collections.abc import Mapping
from dataclasses import dataclass
import json

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DuplicateEdge, GraphError, LoopEdge, NonPositiveWeight
from .linalg import DENSE_LIMIT, gen_eigh


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Finite simple graph with vertex weights ``mu`` and edge weights ``gamma``.

    Vertices are opaque hashable ids kept in input order; edges are stored as
    index arrays ``tail``/``head`` into that order.
    """

    vertices: tuple
    tail: np.ndarray
    head: np.ndarray
    mu: np.ndarray
    gamma: np.ndarray

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return self.tail.shape[0]

    @property
    def edges(self):
        return [(self.vertices[a], self.vertices[b]) for a, b in zip(self.tail, self.head)]

    def index(self, v):
        return self._index[v]

    @property
    def _index(self):
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {v: i for i, v in enumerate(self.vertices)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def degree(self):
        return np.bincount(np.concatenate([self.tail, self.head]), minlength=self.n_vertices)

    def scaled(self, s):
        return WeightedGraph(self.vertices, self.tail, self.head, s * self.mu, s * self.gamma)

    def to_json(self):
        return {
            "vertices": [_jsonable(v) for v in self.vertices],
            "edges": [[_jsonable(self.vertices[a]), _jsonable(self.vertices[b]), float(g)]
                      for a, b, g in zip(self.tail, self.head, self.gamma)],
            "mu": {_key(v): float(m) for v, m in zip(self.vertices, self.mu)},
        }

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        vertices = [_unjson(v) for v in data["vertices"]]
        edges = [(_unjson(u), _unjson(v)) for u, v, _ in data["edges"]]
        gamma = [g for _, _, g in data["edges"]]
        keys = {_key(v): v for v in vertices}
        try:
            mu = {keys[k]: val for k, val in data["mu"].items()}
        except KeyError as exc:
            raise GraphError(f"mu key {exc.args[0]!r} matches no vertex") from None
        return build_graph(vertices, edges, mu, gamma)


@dataclass(frozen=True)
class GraphStats:
    mu0: float
    mu_inf: float
    gamma0: float
    gamma_inf: float
    d_inf: int
    rho0: float
    rho_inf: float
    c_mu: float
    c_gamma: float
    max_inv_rel_weight: float
    rho: np.ndarray

    def check_invariants(self, rtol=1e-12):
        """Relative-weight bounds, each as ``name -> bool``."""
        lo = self.gamma0 / self.mu_inf
        hi = self.d_inf * self.gamma_inf / self.mu0
        inv = 1.0 / self.rho
        inv_lo = self.max_inv_rel_weight / (self.c_gamma * self.d_inf * self.c_mu)
        slack = 1.0 + rtol
        return {
            "rel_weight_lower": bool(np.all(self.rho * slack >= lo) and np.all(self.rho <= hi * slack)),
            "rel_weight_bdd": bool(np.all(inv * slack >= inv_lo) and np.all(inv <= self.max_inv_rel_weight * slack)),
        }


def build_graph(vertices, edges, mu, gamma):
    """Validate and assemble a :class:`WeightedGraph`.

    ``mu`` is a mapping id -> weight or a sequence aligned with ``vertices``;
    ``gamma`` likewise for ``edges`` (a mapping keyed by the edge tuple also works).
    """
    vertices = tuple(vertices)
    index = {v: i for i, v in enumerate(vertices)}
    if len(index) != len(vertices):
        raise GraphError("duplicate vertex id")
    edges = [tuple(e) for e in edges]
    tail = np.empty(len(edges), dtype=np.int64)
    head = np.empty(len(edges), dtype=np.int64)
    seen = set()
    for k, (u, v) in enumerate(edges):
        if u not in index or v not in index:
            raise GraphError(f"edge {(u, v)!r} references an unknown vertex")
        if u == v:
            raise LoopEdge(f"loop at vertex {u!r}")
        key = frozenset((u, v))
        if key in seen:
            raise DuplicateEdge(f"multiple edges between {u!r} and {v!r}")
        seen.add(key)
        tail[k], head[k] = index[u], index[v]
    mu_arr = np.array([mu[v] for v in vertices] if isinstance(mu, Mapping) else list(mu), dtype=float)
    gamma_arr = np.array([gamma[e] for e in edges] if isinstance(gamma, Mapping) else list(gamma), dtype=float)
    if mu_arr.shape != (len(vertices),) or gamma_arr.shape != (len(edges),):
        raise GraphError("weight arrays do not match vertex/edge counts")
    if not (np.all(mu_arr > 0) and np.all(gamma_arr > 0)):
        raise NonPositiveWeight("vertex and edge weights must be positive")
    if not (np.all(np.isfinite(mu_arr)) and np.all(np.isfinite(gamma_arr))):
        raise NonPositiveWeight("weights must be finite")
    tail.flags.writeable = head.flags.writeable = False
    mu_arr.flags.writeable = gamma_arr.flags.writeable = False
    return WeightedGraph(vertices, tail, head, mu_arr, gamma_arr)


def energy(g, f):
    """Discrete energy ``sum_e gamma_e |f(head) - f(tail)|^2``; ``f`` may be complex."""
    f = _as_vertex_array(g, f)
    return _kernels.edge_energy(g.tail, g.head, g.gamma, f)


def laplacian(g):
    """Return ``(L, mu)`` with ``L`` the conductance Laplacian (sparse) and ``mu`` the mass diagonal.

    The weighted Laplacian is ``diag(mu)^-1 @ L``.
    """
    n = g.n_vertices
    w = np.asarray(g.gamma)
    adj = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([g.tail, g.head]),
                                                   np.concatenate([g.head, g.tail]))), shape=(n, n)).tocsr()
    lap = sp.diags(np.asarray(adj.sum(axis=1)).ravel()) - adj
    return lap.tocsr(), np.asarray(g.mu)


def apply_laplacian(g, f):
    """``(Delta f)(v) = 1/mu(v) sum_{e at v} gamma_e (f(v) - f(v_e))``."""
    lap, mu = laplacian(g)
    return (lap @ _as_vertex_array(g, f)) / mu


def spectrum(g, k=None, sparse=None):
    """Ascending eigenvalues of ``L x = lam diag(mu) x``.

    Dense by default; shift-invert Lanczos is used when ``sparse`` is true or
    when the graph exceeds the dense limit (then ``k`` is required).
    """
    lap, mu = laplacian(g)
    if sparse is None:
        sparse = g.n_vertices > DENSE_LIMIT
    if sparse and k is None:
        raise ValueError("sparse spectrum needs an eigenvalue count k")
    return gen_eigh(lap, mu, k=k, sparse=sparse, snap_scale=stats(g).rho_inf)


def stats(g):
    deg = g.degree()
    if np.any(deg == 0):
        raise GraphError("isolated vertex: relative weight undefined")
    wsum = np.bincount(g.tail, weights=g.gamma, minlength=g.n_vertices) + \
        np.bincount(g.head, weights=g.gamma, minlength=g.n_vertices)
    rho = wsum / g.mu
    mu0, mu_inf = float(g.mu.min()), float(g.mu.max())
    gamma0, gamma_inf = float(g.gamma.min()), float(g.gamma.max())
    return GraphStats(
        mu0=mu0, mu_inf=mu_inf, gamma0=gamma0, gamma_inf=gamma_inf,
        d_inf=int(deg.max()), rho0=float(rho.min()), rho_inf=float(rho.max()),
        c_mu=mu_inf / mu0, c_gamma=gamma_inf / gamma0,
        max_inv_rel_weight=mu_inf / gamma0, rho=rho,
    )


def n_components(g):
    labels = _kernels.min_label_components(g.n_vertices, g.tail, g.head)
    return int(np.unique(labels).size)


def _as_vertex_array(g, f):
    if isinstance(f, Mapping):
        f = [f[v] for v in g.vertices]
    f = np.asarray(f)
    if f.shape[0] != g.n_vertices:
        raise GraphError("function must be defined on every vertex")
    return f


def _jsonable(v):
    return list(_jsonable(x) for x in v) if isinstance(v, tuple) else v


def _key(v):
    return json.dumps(_jsonable(v)) if isinstance(v, tuple) else str(v)


def _unjson(v):
    return tuple(_unjson(x) for x in v) if isinstance(v, list) else v

