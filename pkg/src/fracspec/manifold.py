"""Closed-form parameters and error terms for graph-like manifolds built over level graphs.

Nothing here solves a PDE.  Exponential quantities are kept as
:class:`GeometricRate` pairs ``mantissa * ratio**m`` in exact sympy
arithmetic, so tables stay exact and large ``m`` never overflows.
"""
from dataclasses import dataclass
import math

import numpy as np
import sympy

from .errors import ConfigError, DomainError, IncompatibleWeights, InvalidRatio, OutOfWindow


def exact(x):
    """Exact sympy number for ints, Fractions, strings and floats (floats via their decimal repr)."""
    if isinstance(x, sympy.Basic):
        return x
    if isinstance(x, float):
        return sympy.nsimplify(repr(x), rational=True)
    return sympy.nsimplify(x)


@dataclass(frozen=True)
class GeometricRate:
    mantissa: object
    ratio: object

    def at(self, m):
        return sympy.simplify(self.mantissa * self.ratio ** m)

    def log_at(self, m):
        """``log(value at m)`` as a float, safe for huge ``m``."""
        return float(sympy.log(self.mantissa)) + m * float(sympy.log(self.ratio))

    def __mul__(self, other):
        if isinstance(other, GeometricRate):
            return GeometricRate(self.mantissa * other.mantissa, self.ratio * other.ratio)
        return GeometricRate(self.mantissa * exact(other), self.ratio)

    def __pow__(self, p):
        p = exact(p)
        return GeometricRate(self.mantissa ** p, self.ratio ** p)

    def __str__(self):
        return f"{sympy.nsimplify(self.mantissa)} * ({sympy.nsimplify(self.ratio)})^m"


@dataclass(frozen=True)
class MfdScaling:
    m: int
    d: int
    c2: GeometricRate
    tau: GeometricRate
    length: GeometricRate   # for a generation-0 edge weight of 1; divide by gamma0(e0)
    eps: GeometricRate
    edge_lengths: tuple     # per generation-0 edge, exact

    @property
    def c_m(self):
        return math.sqrt(float(self.c2.at(self.m)))

    @property
    def tau_m(self):
        return float(self.tau.at(self.m))

    @property
    def eps_m(self):
        return float(self.eps.at(self.m))


def mfd_scaling(sys, d, Lambda, Eps, eps0=1, ell00=1, m=0):
    """Isometric and energy rescaling factors of the graph-like manifold at generation ``m``.

    The energy factor equals the metric-graph one; the isometric factor gains
    ``eps_m^{-(d-1)/2}`` because transversal volumes scale like ``eps_m^{d-1}``.
    """
    lam, eps_ratio, e0, l00 = exact(Lambda), exact(Eps), exact(eps0), exact(ell00)
    if int(d) != d or d < 2:
        raise ConfigError("ambient dimension d must be an integer >= 2")
    if not (0 < eps_ratio < lam < 1):
        raise InvalidRatio(f"need 0 < Eps < Lambda < 1, got Eps={eps_ratio}, Lambda={lam}")
    if not (e0 > 0 and l00 > 0):
        raise ConfigError("eps0 and ell00 must be positive")
    r, N = sympy.Rational(sys.r), sympy.Integer(sys.N)
    C0N0 = sympy.Rational(sys.C0) * sys.N0
    c2_graph = GeometricRate(2 / (l00 * C0N0), 1 / (N * lam))
    tau = GeometricRate(l00 ** 2 * C0N0 / 2, N * lam ** 2 / r)
    eps = GeometricRate(e0, eps_ratio)
    c2 = c2_graph * (eps ** (-(d - 1)))
    length = GeometricRate(l00, lam)
    edge_lengths = tuple(sympy.simplify(length.at(m) / sympy.Rational(g)) for g in sys.gamma0)
    return MfdScaling(m, int(d), c2, tau, length, eps, edge_lengths)


@dataclass(frozen=True)
class ManifoldPlan:
    d: int
    Lambda: float
    Eps: float
    eps0: float = 1.0
    ell00: float = 1.0
    kappa: float = 1.0
    vol_core_0: float = 1.0
    vol_core_inf: float = 1.0
    lambda2_core: float = 1.0
    lambda20: float = 1.0
    alpha0: float = 0.1
    alpha_inf: float = 0.1
    vol_y: float = 1.0

    def __post_init__(self):
        if not (0 < self.kappa <= 1):
            raise DomainError("collar fraction kappa must lie in (0, 1]")
        if self.alpha_inf > 0.5 or self.alpha0 <= 0 or self.alpha0 > self.alpha_inf:
            raise DomainError("need 0 < alpha0 <= alpha_inf <= 1/2")
        if self.lambda2_core <= 0:
            raise DomainError("core eigenvalue bound must be positive")
        if not (0 < self.lambda20 <= 2):
            raise DomainError("lambda_{2,0} must lie in (0, 2]")
        if not (0 < self.vol_core_0 <= self.vol_core_inf):
            raise DomainError("need 0 < vol_core_0 <= vol_core_inf")

    def in_fractal_window(self, sys):
        lo = float(sys.r / sys.N) * self.Lambda
        return lo < self.Eps < self.Lambda


def check_mfd_compatibility(g, lengths, vol_y=1.0, rtol=1e-10):
    """``(c^2, tau)`` for a compatible (graph, edge lengths, transversal volumes) triple."""
    lengths = np.asarray(lengths, dtype=float)
    vol_y = np.broadcast_to(np.asarray(vol_y, dtype=float), lengths.shape)
    half = 0.5 * lengths * vol_y
    nu = np.bincount(g.tail, weights=half, minlength=g.n_vertices) + \
        np.bincount(g.head, weights=half, minlength=g.n_vertices)
    inv_c2 = nu / g.mu
    if np.ptp(inv_c2) > rtol * inv_c2.max():
        raise IncompatibleWeights("(1/2mu) sum l vol Y varies over vertices")
    c2 = 1.0 / float(inv_c2.mean())
    prod = g.gamma * lengths / vol_y
    if np.ptp(prod) > rtol * prod.max():
        raise IncompatibleWeights("gamma l / vol Y varies over edges")
    return c2, float(prod.mean()) / c2


def mfd_delta_terms(alpha_inf, alpha0, lambda20, c_gamma, vol_ratio, max_inv_rel_weight,
                    kappa, ell0, lambda2_core):
    """The three squared error terms of the graph-like manifold bound."""
    if alpha_inf > 0.5:
        raise DomainError(f"alpha_inf={alpha_inf} exceeds 1/2")
    if alpha0 <= 0:
        raise DomainError("alpha0 must be positive")
    if lambda2_core <= 0:
        raise DomainError("core eigenvalue bound must be positive")
    if kappa <= 0 or ell0 <= 0 or lambda20 <= 0:
        raise DomainError("kappa, ell0 and lambda20 must be positive")
    return (
        2.0 * alpha_inf,
        18.0 / (lambda20 * alpha0) * c_gamma * vol_ratio ** 2 * max_inv_rel_weight,
        kappa + 2.0 / (kappa * ell0 ** 2 * lambda2_core),
    )


def mfd_delta(stats, plan, ell0, vol0, vol_inf):
    """Squared error ``delta^2`` for a graph-like manifold compatible with a graph."""
    return max(mfd_delta_terms(plan.alpha_inf, plan.alpha0, plan.lambda20, stats.c_gamma,
                               vol_inf / vol0, stats.max_inv_rel_weight, plan.kappa, ell0,
                               plan.lambda2_core))


@dataclass(frozen=True)
class FracRates:
    window: tuple
    rate_core: object     # per-generation factor of the (Eps/Lambda)^{m/2} term
    rate_weight: object   # per-generation factor of the (Lambda/Eps * r/N)^{m/2} term
    Eps_star: object
    optimal_rate: object
    delta_m: object = None

    @property
    def rate(self):
        return sympy.Max(self.rate_core, self.rate_weight)


def frac_window(sys, Lambda):
    lam = exact(Lambda)
    return (sympy.simplify(sympy.Rational(sys.r) / sys.N * lam), lam)


def mfd_frac_delta(sys, Lambda, Eps, m=None):
    """Geometric error rates of the fractal-manifold approximation and the optimal transversal ratio.

    Constants in front of the rates are unconstrained; ``delta_m`` uses 1.
    """
    lam, eps_ratio = exact(Lambda), exact(Eps)
    lo, hi = frac_window(sys, lam)
    if not (lo < eps_ratio < hi):
        raise OutOfWindow(f"Eps={eps_ratio} outside the open window ({lo}, {hi})")
    rN = sympy.Rational(sys.r) / sys.N
    rate_core = sympy.sqrt(eps_ratio / lam)
    rate_weight = sympy.sqrt(lam / eps_ratio * rN)
    delta_m = None if m is None else sympy.Max(rate_core ** m, rate_weight ** m)
    return FracRates((lo, hi), sympy.simplify(rate_core), sympy.simplify(rate_weight),
                     sympy.simplify(sympy.sqrt(rN) * lam), sympy.simplify(rN ** sympy.Rational(1, 4)), delta_m)


def eps_threshold(ell0, C_v):
    """Largest transversal scale for the core eigenvalue estimate: ``ell0 / C_v^2``."""
    if C_v <= 0:
        raise DomainError("C_v must be positive")
    return ell0 / C_v ** 2


CASE_LAMBDAS = ("geometric", "inverse-weight", "unit-tau")


def case_lambda(sys, case):
    if case == "geometric":
        return sympy.Rational(sys.theta)
    if case == "inverse-weight":
        return sympy.Rational(sys.r)
    if case == "unit-tau":
        return sympy.sqrt(sympy.Rational(sys.r) / sys.N)
    raise ConfigError(f"unknown case {case!r}")


def mfd_table(sys):
    """One row per case: length ratio, Eps window, c ratio (symbolic in Eps, d), tau ratio, optimal Eps."""
    Eps, d = sympy.symbols("Eps d", positive=True)
    rows = []
    for k, case in enumerate(CASE_LAMBDAS, start=1):
        lam = case_lambda(sys, case)
        lo, hi = frac_window(sys, lam)
        rN = sympy.Rational(sys.r) / sys.N
        rows.append({
            "case": k,
            "name": case,
            "Lambda": lam,
            "length_ratio": lam,
            "window": (lo, hi),
            "c_ratio": (Eps ** (d - 1) * sys.N * lam) ** sympy.Rational(-1, 2),
            "tau_ratio": sympy.simplify(sys.N * lam ** 2 / sympy.Rational(sys.r)),
            "Eps_star": sympy.simplify(sympy.sqrt(rN) * lam),
            "optimal_delta_ratio": sympy.simplify(rN ** sympy.Rational(1, 4)),
        })
    return rows


def format_table(rows):
    head = ["Case", "l_{m,e}=", "eps_m=", "Eps in", "c_m=", "tau_m=", "Eps*"]
    lines = [" | ".join(head)]
    for row in rows:
        tau = row["tau_ratio"]
        lines.append(" | ".join([
            str(row["case"]),
            f"O(({sympy.sstr(row['length_ratio'])})^m)",
            "O(Eps^m)",
            f"({sympy.sstr(row['window'][0])}, {sympy.sstr(row['window'][1])})",
            f"O(({sympy.sstr(row['c_ratio'])})^m)",
            "1" if tau == 1 else f"O(({sympy.sstr(tau)})^m)",
            sympy.sstr(row["Eps_star"]),
        ]))
    return "\n".join(lines)


def table_to_json(rows):
    return [{k: ([str(x) for x in v] if isinstance(v, tuple) else (str(v) if isinstance(v, sympy.Basic) else v))
             for k, v in row.items()} for row in rows]
