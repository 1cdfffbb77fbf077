"""Identification operators between a weighted graph and a metric graph, quasi-unitarity
defects measured as operator norms, closed-form error bounds, and spectral comparison.

All operator norms are taken with respect to the weighted inner products:
``l^2(V, mu)`` on the graph side and the FEM mass matrix on the metric side.
Both sides are expressed in orthonormal eigenbases of their Laplacians, which
turns every weighted norm into a plain spectral norm.
"""
from dataclasses import asdict, dataclass, field
from fractions import Fraction
import math

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, IncompatibleWeights, OutOfRange, SolverFailure
from .graph import laplacian, stats
from .linalg import as_dense, opnorm
from .metric import check_compatibility, harmonic_partition


@dataclass(frozen=True, eq=False)
class IdentificationPair:
    """Matrices of ``J, J', J^1, J'^1`` in the nodal FEM basis and vertex basis."""

    J: np.ndarray
    Jp: np.ndarray
    J1: np.ndarray
    Jp1: np.ndarray
    psi: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    B: np.ndarray
    c: float
    tau: float

    def apply_J(self, f):
        return self.J @ np.asarray(f)

    def apply_Jp(self, u):
        return self.Jp @ np.asarray(u)


def build_identification(level, mg, fem, plan=None, *, c=None, tau=None, rtol=1e-10):
    """Identification operators for a compatible (graph, metric graph) pair.

    ``level`` is a :class:`~fracspec.pcf.LevelGraph` or a bare weighted graph;
    scale factors come from ``plan`` or from ``c``/``tau``.
    """
    g = getattr(level, "graph", level)
    if plan is not None:
        c, tau = plan.c, plan.tau
    if c is None or tau is None:
        raise ValueError("need a scaling plan or explicit c and tau")
    if fem.mg is not mg and not np.array_equal(fem.mg.lengths, mg.lengths):
        raise ValueError("FEM discretisation belongs to a different metric graph")
    check_compatibility(g, mg, c * c, tau, rtol=rtol)
    psi_sp, nu = harmonic_partition(fem)
    if np.max(np.abs(nu - mg.vertex_measure())) > rtol * max(1.0, nu.max()):
        raise IncompatibleWeights("FEM vertex measure disagrees with half incident length")
    psi = psi_sp.toarray()
    B = as_dense(fem.B)
    J = c * psi
    Jp = (1.0 / c) * (psi.T @ B) / nu[:, None]
    Jp1 = np.zeros((g.n_vertices, fem.n_dof))
    Jp1[np.arange(g.n_vertices), fem.vertex_dofs] = 1.0 / c
    return IdentificationPair(J, Jp, J.copy(), Jp1, psi, nu, np.asarray(g.mu), B, float(c), float(tau))


@dataclass
class QueReport:
    normJ: float
    adjointDefect: float
    jpj: float
    jjp: float
    compat1: float
    compat2: float
    formCloseness: float
    opDefect: float
    delta_theoretical: float
    delta_components: dict
    fem_error: dict = field(default_factory=dict)
    eigen_table: list = field(default_factory=list)
    hausdorff: float = float("nan")
    truncated: bool = True
    notes: list = field(default_factory=list)

    MEASURED = ("normJ", "adjointDefect", "jpj", "jjp", "compat1", "compat2", "formCloseness", "opDefect")

    def measured(self):
        return {k: getattr(self, k) for k in self.MEASURED}

    def bound_checks(self):
        """``name -> (value, allowed, ok)`` against the theoretical delta; opDefect uses delta_op = 4 delta."""
        out = {}
        d = self.delta_theoretical
        for k in ("adjointDefect", "jpj", "jjp", "compat1", "compat2", "formCloseness"):
            allowed = d + self.fem_error.get(k, 0.0)
            out[k] = (getattr(self, k), allowed, getattr(self, k) <= allowed)
        allowed = form_to_op(d) + self.fem_error.get("opDefect", 0.0)
        out["opDefect"] = (self.opDefect, allowed, self.opDefect <= allowed)
        allowed = 1.0 + d + self.fem_error.get("normJ", 0.0)
        out["normJ"] = (self.normJ, allowed, self.normJ <= allowed)
        return out

    def to_json(self):
        out = asdict(self)
        out["bound_checks"] = {k: {"value": v, "allowed": a, "ok": bool(ok)}
                               for k, (v, a, ok) in self.bound_checks().items()}
        return out


class _Side:
    """Orthonormal eigenbasis of a Laplacian w.r.t. its Hilbert-space Gram matrix.

    ``coords`` maps nodal vectors to coefficients (``W^T G``), ``basis`` maps
    coefficients back (``W``); ``lam`` are the eigenvalues.
    """

    def __init__(self, stiff, gram):
        if np.ndim(gram) == 1:
            s = 1.0 / np.sqrt(gram)
            lam, q = np.linalg.eigh(s[:, None] * as_dense(stiff) * s[None, :])
            self.basis = s[:, None] * q
            self.coords = (q * np.sqrt(gram)[:, None]).T
        else:
            try:
                lam, w = sla.eigh(as_dense(stiff), as_dense(gram))
            except sla.LinAlgError as exc:
                raise SolverFailure(f"generalised eigensolver failed: {exc}") from exc
            self.basis = w
            self.coords = w.T @ as_dense(gram)
        self.lam = np.maximum(lam, 0.0)
        self.res_half = 1.0 / np.sqrt(1.0 + self.lam)
        self.res = 1.0 / (1.0 + self.lam)


def measure_quasi_unitarity(pair, level, fem, tau=None, *, estimate_fem_error=False, k=None):
    """Measure every defect norm of the pair and compare with the closed-form delta.

    ``estimate_fem_error`` repeats the measurement on the halved mesh and
    reports ``|value_h - value_{h/2}|`` per quantity.
    """
    g = getattr(level, "graph", level)
    tau = pair.tau if tau is None else tau
    report, gs, ms = _measure(pair, g, fem, tau)
    st = stats(g)
    report.delta_theoretical = delta_metric_graph(st)
    report.delta_components = metric_graph_delta_components(st, fem.mg, tau)
    if estimate_fem_error:
        fine = fem.refined()
        fine_pair = build_identification(g, fem.mg, fine, c=pair.c, tau=pair.tau)
        other = _measure(fine_pair, g, fine, tau)[0]
        report.fem_error = {name: abs(getattr(report, name) - getattr(other, name)) for name in QueReport.MEASURED}
    count = min(k or g.n_vertices, g.n_vertices)
    cmp = spectral_compare(gs.lam, ms.lam, count)
    report.eigen_table, report.hausdorff = cmp.table, cmp.hausdorff
    report.truncated = count < ms.lam.size
    report.notes.append(f"hausdorff distance over the first {count} eigenvalues of each side")
    return report


def _measure(pair, g, fem, tau):
    lap_g = as_dense(laplacian(g)[0])
    gs = _Side(lap_g, g.mu)
    ms = _Side(tau * fem.A, fem.B)
    # operators in orthonormal coordinates
    J = ms.coords @ pair.J @ gs.basis
    Jp = gs.coords @ pair.Jp @ ms.basis
    J1 = ms.coords @ pair.J1 @ gs.basis
    Jp1 = gs.coords @ pair.Jp1 @ ms.basis
    n_g = J.shape[1]
    normJ = opnorm(J)
    adjoint = opnorm(J.T - Jp)
    jpj = opnorm((np.eye(n_g) - Jp @ J) * gs.res_half[None, :])
    jjp = opnorm(np.diag(ms.res_half) - (J @ Jp) * ms.res_half[None, :])
    compat1 = opnorm((J1 - J) * gs.res_half[None, :])
    compat2 = opnorm((Jp1 - Jp) * ms.res_half[None, :])
    # form defect e(f, J'1 u) - tau e_M(J1 f, u) on the form-norm unit balls
    form = (gs.lam[:, None] * Jp1) - (J1.T * ms.lam[None, :])
    form_close = opnorm(gs.res_half[:, None] * form * ms.res_half[None, :])
    op = opnorm(ms.res[:, None] * J - J * gs.res[None, :])
    report = QueReport(normJ, adjoint, jpj, jjp, compat1, compat2, form_close, op, float("nan"), {})
    return report, gs, ms


def delta_metric_graph(st):
    """``sqrt(2 (gamma_inf/gamma_0)(mu_inf/gamma_0))``."""
    return math.sqrt(2.0 * st.c_gamma * st.max_inv_rel_weight)


def delta_uniform(st):
    """Uniform-graph variant ``sqrt(2 c_gamma^2 d_inf c_mu / rho_0)``."""
    return math.sqrt(2.0 * st.c_gamma ** 2 * st.d_inf * st.c_mu / st.rho0)


def delta_general(alpha_inf, mu_inf_over_gamma0, tau, lambda2, dc2_sup, dd2_sup, components=False):
    """``sqrt(max{2 alpha, 2 mu/gamma0, 2/(tau lambda2), 2 dc^2/tau, 4 dd^2/tau})``."""
    if min(alpha_inf, mu_inf_over_gamma0, dc2_sup, dd2_sup) < 0:
        raise DomainError("inputs must be non-negative")
    if alpha_inf > 0.5:
        raise DomainError(f"alpha_inf={alpha_inf} exceeds 1/2")
    if lambda2 <= 0 or tau <= 0:
        raise DomainError("lambda2 and tau must be positive")
    terms = {
        "alpha": 2.0 * alpha_inf,
        "inv_rel_weight": 2.0 * mu_inf_over_gamma0,
        "lambda2": 2.0 / (tau * lambda2),
        "delta_c": 2.0 / tau * dc2_sup,
        "delta_d": 4.0 / tau * dd2_sup,
    }
    delta = math.sqrt(max(terms.values()))
    return (delta, terms) if components else delta


def metric_graph_delta_components(st, mg, tau):
    """Squared error terms of the general bound instantiated for a metric graph."""
    _, terms = delta_general(0.0, st.max_inv_rel_weight, tau, 2.0 / mg.ell_inf ** 2,
                             mg.ell_inf ** 2 / 2.0, 0.0, components=True)
    return terms


def compose_delta(delta, delta_tilde):
    """Error of the composed pair: ``22 delta + 43 delta_tilde`` (both in [0, 1])."""
    d, dt = _exact(delta), _exact(delta_tilde)
    if not (0 <= d <= 1 and 0 <= dt <= 1):
        raise OutOfRange("transitivity needs 0 <= delta, delta_tilde <= 1")
    out = 22 * d + 43 * dt
    return out if isinstance(delta, Fraction) and isinstance(delta_tilde, Fraction) else float(out)


def form_to_op(delta):
    """Form closeness delta gives operator closeness ``4 delta``."""
    return 4 * delta


def _exact(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass
class SpectralComparison:
    table: list
    hausdorff: float
    truncated_to: int


def spectral_compare(spec_a, spec_b, k=None):
    """Per-index differences and Hausdorff distance of ``{1/(1+lam)}`` over the first ``k`` values."""
    a, b = np.asarray(spec_a, dtype=float), np.asarray(spec_b, dtype=float)
    if np.any(np.diff(a) < 0) or np.any(np.diff(b) < 0):
        raise ValueError("spectra must be ascending")
    k = min(len(a), len(b)) if k is None else min(k, len(a), len(b))
    a, b = a[:k], b[:k]
    table = [(i + 1, float(x), float(y), float(abs(x - y))) for i, (x, y) in enumerate(zip(a, b))]
    return SpectralComparison(table, hausdorff(1.0 / (1.0 + a), 1.0 / (1.0 + b)), k)


def hausdorff(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        return 0.0 if x.size == y.size else float("inf")
    d = np.abs(x[:, None] - y[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def fit_geometric_ratio(ms, values):
    """Per-generation ratio from a least-squares fit of ``log(values)`` against ``m``.

    Non-positive values are dropped; fewer than two points gives nan.
    """
    ms, values = np.asarray(ms, dtype=float), np.asarray(values, dtype=float)
    keep = np.isfinite(values) & (values > 0)
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(ms[keep], np.log(values[keep]), 1)[0]
    return float(math.exp(slope))
