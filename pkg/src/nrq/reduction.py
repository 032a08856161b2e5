"""Parameter elimination for prescribed-energy critical point problems.

Solving the level constraint ``phi_mu(u) = c`` for ``mu`` turns the pair of
equations ``phi_mu'(u) = 0, phi_mu(u) = c`` into a critical point problem for
the quotient

    mu(c, u) = (I1(u) - c) / I2(u).

Restricting the quotient to a ray gives the scalar fiber map
``psi(t) = mu(c, t*u)``, whose critical scales admit closed forms (two-term
classes) or sit in rigorously bracketed intervals (threshold classes).  The
value of the fiber at its minimizing / maximizing scale defines the reduced
objectives used by the sphere and subspace optimizers.

With degrees ``eta`` (N), ``da`` (A) and ``beta`` (B), sign ``s`` of I2, and
scalars N, A, B evaluated at u, the fiber map is

    psi(t)  = (s*da/A) * (N/eta * t^(eta-da) - B/beta * t^(beta-da) - c*t^(-da))

and its critical scales are the positive roots of

    g(t) = (eta-da)/eta * N * t^eta - (beta-da)/beta * B * t^beta + da*c,

which is monotone on each side of the separator scale
``t_loc = (r*N/B)^(1/(beta-eta))`` with ``r = (eta-da)/(beta-da)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classes import CONCAVE_CONVEX, SP_LIKE, ClassTag
from .errors import (BadExponents, BranchUnavailable, DegenerateFiber,
                     RejectedPair, ZeroDenominator)
from .triple import FunctionalTriple

Array = np.ndarray

# Regime labels of the one-dimensional fiber map.
SINGLE_MIN = "SingleMin"
SINGLE_MAX = "SingleMax"
TWO_CRITICAL = "TwoCritical"
INFLECTION = "Inflection"
NO_CRITICAL = "NoCritical"

I2_FLOOR = 1e-300
MERGE_RTOL = 1e-6       # relative threshold gap below which branches merge
VERIFY_GRAD_TOL = 1e-6
VERIFY_ENERGY_TOL = 1e-8


@dataclass(frozen=True)
class FiberDiagnosis:
    """Classification of one fiber map t -> mu(c, t*u)."""

    regime: str
    t_plus: float | None = None
    t_minus: float | None = None
    t_inflection: float | None = None
    c_local: float | None = None
    psi_at: dict = field(default_factory=dict)

    def branch_scale(self, branch: str) -> float | None:
        return self.t_plus if branch == "plus" else self.t_minus


@dataclass(frozen=True)
class ReducedEval:
    """Reduced objective value and first-order data at one direction."""

    branch: str
    t: float
    lam: float
    dlambda_dc: float
    grad_tangential: Array
    radial_component: float


@dataclass(frozen=True)
class CriticalPair:
    """A verified solution (mu, u, c) of the prescribed-energy system."""

    mu: float
    c: float
    u: Array
    branch: str
    level: int | None = None
    residual_grad: float = 0.0
    residual_energy: float = 0.0
    sign_changes: int | None = None


# ---------------------------------------------------------------------------
# scalar fiber kernels
# ---------------------------------------------------------------------------

def _check_u(u: Array):
    if not np.any(u):
        raise ValueError("u must be nonzero")


def _psi_scalar(tag: ClassTag, c: float, n: float, a: float, b: float,
                t: float, order: int) -> float:
    if t <= 0.0:
        raise ValueError("fiber scale t must be positive")
    eta, beta, da, s = tag.eta, tag.beta, tag.deg_a, tag.i2_sign
    k = s * da / a
    if order == 0:
        return k * (n / eta * t ** (eta - da)
                    - b / beta * t ** (beta - da)
                    - c * t ** (-da))
    if order == 1:
        return k * ((eta - da) * n / eta * t ** (eta - da - 1)
                    - (beta - da) * b / beta * t ** (beta - da - 1)
                    + da * c * t ** (-da - 1))
    if order == 2:
        return k * ((eta - da) * (eta - da - 1) * n / eta * t ** (eta - da - 2)
                    - (beta - da) * (beta - da - 1) * b / beta * t ** (beta - da - 2)
                    - da * (da + 1) * c * t ** (-da - 2))
    raise ValueError("order must be 0, 1 or 2")


def _g_scalar(tag: ClassTag, c: float, n: float, b: float, t: float) -> float:
    """Scaled fiber derivative: g(t) = A t^(da+1)/(s*da) * psi'(t)."""
    eta, beta, da = tag.eta, tag.beta, tag.deg_a
    return ((eta - da) / eta * n * t ** eta
            - (beta - da) / beta * b * t ** beta
            + da * c)


def _dg_scalar(tag: ClassTag, n: float, b: float, t: float) -> float:
    eta, beta, da = tag.eta, tag.beta, tag.deg_a
    return (eta - da) * n * t ** (eta - 1) - (beta - da) * b * t ** (beta - 1)


def threshold_scalars(tag: ClassTag, n: float, b: float) -> tuple[float, float]:
    """Separator scale and degeneracy threshold (t_loc, c_loc) from (N, B).

    Defined for the threshold classes only: the unique solution of
    psi' = psi'' = 0 in the unknowns (t, c).
    """
    if not tag.has_threshold:
        raise BadExponents("degeneracy threshold exists only for the "
                           "concave-convex and SP-like classes")
    eta, beta, da = tag.eta, tag.beta, tag.deg_a
    r = (eta - da) / (beta - da)
    t_loc = (r * n / b) ** (1.0 / (beta - eta))
    c_loc = -(eta - da) * (beta - eta) / (eta * beta * da) * n * t_loc ** eta
    return t_loc, c_loc


def threshold_value(triple: FunctionalTriple, u: Array) -> float:
    """Per-direction degeneracy threshold c(u); 0-homogeneous in u."""
    _check_u(u)
    n, _, b = triple.nab(u)
    return threshold_scalars(triple.tag, n, b)[1]


def threshold_gradient(triple: FunctionalTriple, u: Array) -> Array:
    """Gradient of u -> c(u): c * (e_n * N'/N - e_b * B'/B)."""
    tag = triple.tag
    n, _, b = triple.nab(u)
    gn, _, gb = triple.grads(u)
    c_loc = threshold_scalars(tag, n, b)[1]
    e_n = tag.beta / (tag.beta - tag.eta)
    e_b = tag.eta / (tag.beta - tag.eta)
    return c_loc * (e_n * gn / n - e_b * gb / b)


def _two_term_scale(tag: ClassTag, c: float, b: float) -> float:
    eta, beta = tag.eta, tag.beta
    arg = eta * beta / (beta - eta) * c / b
    return arg ** (1.0 / beta)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def eval_mu(triple: FunctionalTriple, c: float, u: Array) -> float:
    """Quotient mu(c, u) = (I1(u) - c)/I2(u)."""
    _check_u(u)
    i2 = triple.i2(u)
    if abs(i2) < I2_FLOOR:
        raise ZeroDenominator("I2(u) below machine floor; invalid instance")
    return (triple.i1(u) - c) / i2


def eval_psi(triple: FunctionalTriple, c: float, u: Array, t: float,
             order: int = 0) -> float:
    """Fiber map psi(t) = mu(c, t*u) or its first/second derivative."""
    _check_u(u)
    n, a, b = triple.nab(u)
    return _psi_scalar(triple.tag, c, n, a, b, t, order)


def classify_fiber(triple: FunctionalTriple, c: float, u: Array,
                   merge_rtol: float = MERGE_RTOL) -> FiberDiagnosis:
    """Regime and critical scales of the fiber map at (c, u)."""
    _check_u(u)
    tag = triple.tag
    n, a, b = triple.nab(u)
    scalars = (n, a, b)

    if tag.is_two_term:
        branch = tag.two_term_branch(c)
        if branch is None:
            return FiberDiagnosis(regime=NO_CRITICAL)
        t = _two_term_scale(tag, c, b)
        val = _psi_scalar(tag, c, n, a, b, t, 0)
        if branch == "minus":
            return FiberDiagnosis(regime=SINGLE_MAX, t_minus=t, psi_at={t: val})
        return FiberDiagnosis(regime=SINGLE_MIN, t_plus=t, psi_at={t: val})

    t_loc, c_loc = threshold_scalars(tag, n, b)
    gap = c - c_loc
    if abs(gap) <= merge_rtol * abs(c_loc):
        val = _psi_scalar(tag, c, n, a, b, t_loc, 0)
        return FiberDiagnosis(regime=INFLECTION, t_inflection=t_loc,
                              c_local=c_loc, psi_at={t_loc: val})

    if tag.variant == CONCAVE_CONVEX:
        single_max = c >= 0.0
        two_crit = c_loc < c < 0.0
    else:  # SP-like
        single_max = c <= 0.0
        two_crit = 0.0 < c < c_loc

    if single_max:
        t_m = _solve_g(tag, c, scalars, "minus", t_loc, c_loc)
        val = _psi_scalar(tag, c, n, a, b, t_m, 0)
        return FiberDiagnosis(regime=SINGLE_MAX, t_minus=t_m, c_local=c_loc,
                              psi_at={t_m: val})
    if two_crit:
        t_p = _solve_g(tag, c, scalars, "plus", t_loc, c_loc)
        t_m = _solve_g(tag, c, scalars, "minus", t_loc, c_loc)
        if t_m - t_p <= merge_rtol * t_m:
            val = _psi_scalar(tag, c, n, a, b, t_loc, 0)
            return FiberDiagnosis(regime=INFLECTION, t_inflection=t_loc,
                                  c_local=c_loc, psi_at={t_loc: val})
        return FiberDiagnosis(
            regime=TWO_CRITICAL, t_plus=t_p, t_minus=t_m, c_local=c_loc,
            psi_at={t_p: _psi_scalar(tag, c, n, a, b, t_p, 0),
                    t_m: _psi_scalar(tag, c, n, a, b, t_m, 0)})
    return FiberDiagnosis(regime=NO_CRITICAL, c_local=c_loc)


def _solve_g(tag: ClassTag, c: float, scalars, branch: str,
             t_loc: float, c_loc: float) -> float:
    """Root of g on one side of the separator: bisection then Newton polish.

    g is strictly monotone on (0, t_loc) and on (t_loc, inf), so the bracket
    endpoints have opposite signs by construction.
    """
    n, _, b = scalars
    da = tag.deg_a

    def g(t):
        return _g_scalar(tag, c, n, b, t)

    g_loc = da * (c - c_loc)
    if branch == "minus":
        lo, g_lo = t_loc, g_loc
        hi = 2.0 * t_loc
        g_hi = g(hi)
        for _ in range(200):
            if not math.isfinite(g_hi) or g_hi * g_lo < 0.0:
                break
            lo, g_lo = hi, g_hi
            hi *= 2.0
            g_hi = g(hi)
        else:
            raise BranchUnavailable("no sign change found above the separator")
    else:
        hi, g_hi = t_loc, g_loc
        lo = 0.5 * t_loc
        g_lo = g(lo)
        for _ in range(200):
            if g_lo * g_hi < 0.0:
                break
            hi, g_hi = lo, g_lo
            lo *= 0.5
            g_lo = g(lo)
        else:
            raise BranchUnavailable("no sign change found below the separator")

    # bisection to a loose relative width, then Newton with bracket safeguard
    for _ in range(2000):
        if hi - lo <= 1e-3 * hi:
            break
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0.0:
            return mid
        if g_mid * g_lo < 0.0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid

    t = 0.5 * (lo + hi)
    for _ in range(100):
        gt = g(t)
        if gt == 0.0:
            break
        if gt * g_lo < 0.0:
            hi = t
        else:
            lo = t
        dg = _dg_scalar(tag, n, b, t)
        step = gt / dg if dg != 0.0 else 0.0
        t_new = t - step
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-12 * t:
            t = t_new
            break
        t = t_new
    return t


def solve_scale(triple: FunctionalTriple, c: float, u: Array,
                branch: str) -> float:
    """Critical scale t_branch(c, u) of the fiber map.

    Raises BranchUnavailable when the regime lacks the branch and
    DegenerateFiber when the two branches cannot be separated.
    """
    if branch not in ("plus", "minus"):
        raise ValueError("branch must be 'plus' or 'minus'")
    _check_u(u)
    tag = triple.tag
    n, a, b = triple.nab(u)

    if tag.is_two_term:
        have = tag.two_term_branch(c)
        if have != branch:
            raise BranchUnavailable(
                f"two-term fiber at c={c:g} has branch {have!r}, not {branch!r}")
        return _two_term_scale(tag, c, b)

    t_loc, c_loc = threshold_scalars(tag, n, b)
    if abs(c - c_loc) <= MERGE_RTOL * abs(c_loc):
        raise DegenerateFiber(
            f"fiber degenerates at c={c:g} (threshold {c_loc:g})")
    if tag.variant == CONCAVE_CONVEX:
        minus_ok = c > c_loc
        plus_ok = c_loc < c < 0.0
    else:
        minus_ok = c < c_loc
        plus_ok = 0.0 < c < c_loc
    ok = minus_ok if branch == "minus" else plus_ok
    if not ok:
        raise BranchUnavailable(
            f"branch {branch!r} unavailable at c={c:g} "
            f"(threshold {c_loc:g}, class {tag.variant})")
    return _solve_g(tag, c, (n, a, b), branch, t_loc, c_loc)


def eval_lambda(triple: FunctionalTriple, c: float, u: Array,
                branch: str) -> ReducedEval:
    """Reduced objective at (c, u): fiber value at the branch scale.

    Returns the value, its energy derivative -1/I2(t u), and the gradient in
    u from the chain identity, projected on the tangent space of the unit
    sphere at u/|u|.  The radial component is returned as a diagnostic; it
    vanishes identically for exact arithmetic.
    """
    _check_u(u)
    tag = triple.tag
    n, a, b = triple.nab(u)
    t = solve_scale(triple, c, u, branch)
    lam = _psi_scalar(tag, c, n, a, b, t, 0)

    eta, beta, da, s = tag.eta, tag.beta, tag.deg_a, tag.i2_sign
    dlam = -s * da / (t ** da * a)

    gn, ga, gb = triple.grads(u)
    grad = (s * da / a) * (t ** (eta - da) * gn / eta
                           - t ** (beta - da) * gb / beta) - (lam / a) * ga
    w = u / np.linalg.norm(u)
    radial = float(grad @ w)
    grad_t = grad - radial * w
    return ReducedEval(branch=branch, t=t, lam=lam, dlambda_dc=dlam,
                       grad_tangential=grad_t, radial_component=radial)


def rayleigh_quotient(triple: FunctionalTriple, u: Array) -> float:
    """Zero-energy limit N(u)/A(u) of the two-term reduced objectives."""
    _check_u(u)
    n, a, _ = triple.nab(u)
    return n / a


def scale_derivative_dc(triple: FunctionalTriple, c: float, u: Array,
                        branch: str) -> float:
    """Energy derivative of the branch scale: -I2'(tu)u / (I2(tu)^2 psi''(t))."""
    tag = triple.tag
    n, a, b = triple.nab(u)
    t = solve_scale(triple, c, u, branch)
    psi2 = _psi_scalar(tag, c, n, a, b, t, 2)
    da, s = tag.deg_a, tag.i2_sign
    i2 = s * t ** da * a / da
    di2_u = s * t ** (da - 1) * a  # <I2'(tu), u> by homogeneity of A
    return -di2_u / (i2 * i2 * psi2)


def energy_identity_residual(triple: FunctionalTriple, mu: float,
                             u: Array) -> float:
    """Two-term identity |phi_mu(u) - (beta-eta)/(beta*eta) * B(u)|.

    Valid at critical points of phi_mu; the residual is the test quantity.
    """
    tag = triple.tag
    if not tag.is_two_term:
        raise BadExponents("energy identity applies to two-term classes only")
    b = triple.eval_b(u)
    return abs(triple.phi(mu, u) - (tag.beta - tag.eta) / (tag.beta * tag.eta) * b)


def count_sign_changes(u: Array, zero_rtol: float = 1e-9) -> int:
    """Sign alternations along a coefficient vector, ignoring near-zeros."""
    scale = float(np.max(np.abs(u)))
    if scale == 0.0:
        return 0
    kept = u[np.abs(u) > zero_rtol * scale]
    if kept.size < 2:
        return 0
    signs = np.sign(kept)
    return int(np.sum(signs[1:] != signs[:-1]))


def verify_pair(triple: FunctionalTriple, mu: float, c: float, u: Array,
                branch: str = "minus", level: int | None = None,
                grad_tol: float = VERIFY_GRAD_TOL,
                energy_tol: float = VERIFY_ENERGY_TOL) -> CriticalPair:
    """Residual check of a candidate pair against the defining system.

    Accepts iff the scaled gradient norm of phi_mu at u and the energy gap
    |phi_mu(u) - c| both sit below tolerance; raises RejectedPair otherwise.
    """
    _check_u(u)
    tag = triple.tag
    norm_u = float(np.linalg.norm(u))
    gp = triple.grad_phi(mu, u)
    residual_grad = float(np.linalg.norm(gp)) / max(1.0, norm_u ** (tag.max_degree - 1.0))
    residual_energy = abs(triple.phi(mu, u) - c)
    if residual_grad > grad_tol or residual_energy > energy_tol * (1.0 + abs(c)):
        raise RejectedPair(
            f"pair rejected: grad residual {residual_grad:.3e}, "
            f"energy residual {residual_energy:.3e}",
            residual_grad, residual_energy)
    changes = count_sign_changes(u) if triple.meta.get("mesh1d") else None
    return CriticalPair(mu=mu, c=c, u=np.array(u, dtype=float), branch=branch,
                        level=level, residual_grad=residual_grad,
                        residual_energy=residual_energy, sign_changes=changes)
