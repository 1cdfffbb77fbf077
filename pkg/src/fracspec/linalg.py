"""Small dense/sparse linear-algebra helpers used by several modules."""
import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverFailure

DENSE_LIMIT = 20_000
SNAP = 1e-10


def as_dense(a):
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


def gen_eigh(a, b, k=None, sparse=False, snap_scale=None, vectors=False):
    """Smallest eigenpairs of ``a x = lam b x`` with ``b`` symmetric positive definite.

    A 1-D ``b`` is treated as a diagonal.  Eigenvalues below
    ``SNAP * snap_scale`` in absolute value are returned as exactly 0.
    """
    diag = np.ndim(b) == 1
    n = a.shape[0]
    if sparse and k is not None and k < n - 1:
        w, v = _sparse_eigh(a, b, k, diag)
    else:
        w, v = _dense_eigh(a, b, diag)
        if k is not None:
            w, v = w[:k], v[:, :k]
    if snap_scale is None:
        snap_scale = max(abs(w[-1]), 1.0) if w.size else 1.0
    w = np.where(np.abs(w) < SNAP * snap_scale, 0.0, w)
    return (w, v) if vectors else w


def _dense_eigh(a, b, diag):
    a = as_dense(a)
    try:
        if diag:
            s = 1.0 / np.sqrt(np.asarray(b, dtype=float))
            w, y = np.linalg.eigh(s[:, None] * a * s[None, :])
            return w, s[:, None] * y
        return sla.eigh(a, as_dense(b))
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise SolverFailure(f"dense eigensolver failed: {exc}") from exc


def _sparse_eigh(a, b, k, diag):
    a = sp.csc_matrix(a)
    bm = (sp.diags(np.asarray(b, dtype=float)) if diag else sp.csc_matrix(b)).tocsc()
    # shift-invert just below zero; a is positive semidefinite
    sigma = -1e-6 * max(abs(a).max(), 1.0) / max(abs(bm).max(), 1e-300)
    try:
        w, v = spla.eigsh(a, k=k, M=bm, sigma=sigma, which="LM")
    except spla.ArpackNoConvergence as exc:
        raise SolverFailure(f"shift-invert Lanczos did not converge: {exc}") from exc
    order = np.argsort(w)
    return w[order], v[:, order]


def opnorm(x):
    """Spectral norm (largest singular value) of a dense matrix."""
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    if min(x.shape) <= 1200:
        return float(np.linalg.norm(x, 2))
    op = spla.aslinearoperator(x)
    try:
        s = spla.svds(op, k=1, return_singular_vectors=False, tol=1e-7, ncv=40)
    except spla.ArpackNoConvergence as exc:
        raise SolverFailure(f"largest singular value did not converge: {exc}") from exc
    return float(s[0])
