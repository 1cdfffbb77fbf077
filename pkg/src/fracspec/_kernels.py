"""Inner loops shared by the graph, fractal and FEM modules.

Each kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version with identical results.  The numba path is used when numba imports
and ``FRACSPEC_DISABLE_JIT`` is unset (or ``0``); set it to ``1`` to force the
numpy path.
"""
import os

import numpy as np

_DISABLED = os.environ.get("FRACSPEC_DISABLE_JIT", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"


# --- numpy reference path -------------------------------------------------

def _p1_triplets_np(ei, ej, h, wl, wr):
    ne = ei.shape[0]
    rows = np.empty(4 * ne, dtype=np.int64)
    cols = np.empty(4 * ne, dtype=np.int64)
    rows[0::4], cols[0::4] = ei, ei
    rows[1::4], cols[1::4] = ei, ej
    rows[2::4], cols[2::4] = ej, ei
    rows[3::4], cols[3::4] = ej, ej
    inv = 1.0 / h
    a = np.empty(4 * ne)
    a[0::4] = inv
    a[1::4] = -inv
    a[2::4] = -inv
    a[3::4] = inv
    b = np.empty(4 * ne)
    b[0::4] = h / 3.0
    b[1::4] = h / 6.0
    b[2::4] = h / 6.0
    b[3::4] = h / 3.0
    # exact integrals of a linear weight times P1 x P1
    bw = np.empty(4 * ne)
    bw[0::4] = h * (wl / 4.0 + wr / 12.0)
    off = h * (wl + wr) / 12.0
    bw[1::4] = off
    bw[2::4] = off
    bw[3::4] = h * (wl / 12.0 + wr / 4.0)
    return rows, cols, a, b, bw


def _edge_energy_np(tail, head, gamma, f):
    d = f[head] - f[tail]
    return float(np.sum(gamma * (d.real ** 2 + d.imag ** 2)))


def _min_label_components_np(n, pa, pb):
    label = np.arange(n, dtype=np.int64)
    if pa.shape[0] == 0:
        return label
    # label propagation: every pair takes the minimum label until stable
    while True:
        m = np.minimum(label[pa], label[pb])
        new = label.copy()
        np.minimum.at(new, pa, m)
        np.minimum.at(new, pb, m)
        new = new[new]
        if np.array_equal(new, label):
            return label
        label = new


# --- numba path -----------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _p1_triplets_nb(ei, ej, h, wl, wr):
        ne = ei.shape[0]
        rows = np.empty(4 * ne, dtype=np.int64)
        cols = np.empty(4 * ne, dtype=np.int64)
        a = np.empty(4 * ne)
        b = np.empty(4 * ne)
        bw = np.empty(4 * ne)
        for k in range(ne):
            i = ei[k]
            j = ej[k]
            hk = h[k]
            p = 4 * k
            rows[p] = i
            cols[p] = i
            rows[p + 1] = i
            cols[p + 1] = j
            rows[p + 2] = j
            cols[p + 2] = i
            rows[p + 3] = j
            cols[p + 3] = j
            inv = 1.0 / hk
            a[p] = inv
            a[p + 1] = -inv
            a[p + 2] = -inv
            a[p + 3] = inv
            b[p] = hk / 3.0
            b[p + 1] = hk / 6.0
            b[p + 2] = hk / 6.0
            b[p + 3] = hk / 3.0
            off = hk * (wl[k] + wr[k]) / 12.0
            bw[p] = hk * (wl[k] / 4.0 + wr[k] / 12.0)
            bw[p + 1] = off
            bw[p + 2] = off
            bw[p + 3] = hk * (wl[k] / 12.0 + wr[k] / 4.0)
        return rows, cols, a, b, bw

    @njit(cache=True)
    def _edge_energy_real_nb(tail, head, gamma, f):
        s = 0.0
        for k in range(tail.shape[0]):
            d = f[head[k]] - f[tail[k]]
            s += gamma[k] * d * d
        return s

    @njit(cache=True)
    def _edge_energy_complex_nb(tail, head, gamma, f):
        s = 0.0
        for k in range(tail.shape[0]):
            d = f[head[k]] - f[tail[k]]
            s += gamma[k] * (d.real * d.real + d.imag * d.imag)
        return s

    @njit(cache=True)
    def _find(parent, x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    @njit(cache=True)
    def _min_label_components_nb(n, pa, pb):
        parent = np.arange(n)
        for k in range(pa.shape[0]):
            ra = _find(parent, pa[k])
            rb = _find(parent, pb[k])
            if ra < rb:
                parent[rb] = ra
            elif rb < ra:
                parent[ra] = rb
        out = np.empty(n, dtype=np.int64)
        for x in range(n):
            out[x] = _find(parent, x)
        return out


# --- dispatch ---------------------------------------------------------------

def p1_triplets(ei, ej, h, wl, wr, backend=None):
    """COO triplets of P1 stiffness, mass and linearly weighted mass.

    Element ``k`` joins global nodes ``ei[k]``-``ej[k]`` with length ``h[k]``;
    the weight is affine with nodal values ``wl[k]``, ``wr[k]``.
    """
    args = (
        np.ascontiguousarray(ei, dtype=np.int64),
        np.ascontiguousarray(ej, dtype=np.int64),
        np.ascontiguousarray(h, dtype=np.float64),
        np.ascontiguousarray(wl, dtype=np.float64),
        np.ascontiguousarray(wr, dtype=np.float64),
    )
    if _use_numba(backend):
        return _p1_triplets_nb(*args)
    return _p1_triplets_np(*args)


def edge_energy(tail, head, gamma, f, backend=None):
    """Sum of ``gamma * |f[head] - f[tail]|**2`` over edges."""
    f = np.asarray(f)
    if _use_numba(backend):
        if np.iscomplexobj(f):
            return float(_edge_energy_complex_nb(tail, head, gamma, np.ascontiguousarray(f, dtype=np.complex128)))
        return float(_edge_energy_real_nb(tail, head, gamma, np.ascontiguousarray(f, dtype=np.float64)))
    return _edge_energy_np(tail, head, gamma, f)


def min_label_components(n, pa, pb, backend=None):
    """Connected components of ``n`` items under the pairs ``(pa[k], pb[k])``.

    Each item is labelled by the smallest index in its component.
    """
    pa = np.ascontiguousarray(pa, dtype=np.int64)
    pb = np.ascontiguousarray(pb, dtype=np.int64)
    if _use_numba(backend):
        return _min_label_components_nb(int(n), pa, pb)
    return _min_label_components_np(int(n), pa, pb)


def _use_numba(backend):
    if backend is None:
        return HAS_NUMBA
    if backend == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba backend requested but unavailable")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")
