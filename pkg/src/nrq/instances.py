"""Concrete functional triples: 1-d p-Laplacian meshes and diagonal surrogates.

All instances are exactly homogeneous nodewise, so the Euler identities hold
to rounding error and the fiber closed forms apply without quadrature bias.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import classes
from .classes import ClassTag
from .errors import BadExponents, CoercivityUnverified
from .triple import FunctionalTriple

Array = np.ndarray


def _signed_power(x: Array, e: float) -> Array:
    return np.sign(x) * np.abs(x) ** e


def make_plap1d(p: float, q: float, r: float, m: int) -> FunctionalTriple:
    """Dirichlet p-Laplacian on (0,1) with m interior nodes.

    N is the discrete gradient energy sum |u_{i+1}-u_i|^p / h^(p-1) with zero
    boundary values, A and B are composite midpoint sums h*sum|u_i|^q and
    h*sum|u_i|^r.  Class assignment: q = p gives the two-term classes
    (super for r > p, sub for r < p); q < p < r gives concave-convex.
    """
    if min(p, q, r) <= 1.0:
        raise BadExponents("exponents must exceed 1")
    if m < 3:
        raise BadExponents("need at least 3 interior nodes")
    if q == p:
        if r > p:
            tag = classes.two_term_super(p, r)
        elif r < p:
            tag = classes.two_term_sub(p, r)
        else:
            raise BadExponents("r must differ from p")
    elif q < p < r:
        tag = classes.concave_convex(q, p, r)
    else:
        raise BadExponents(
            f"no class for (p, q, r) = ({p}, {q}, {r}): "
            "need q = p with r != p, or q < p < r")

    h = 1.0 / (m + 1)
    hp = h ** (p - 1.0)

    def diffs(u: Array) -> Array:
        d = np.empty(u.size + 1)
        d[0] = u[0]
        d[1:-1] = u[1:] - u[:-1]
        d[-1] = -u[-1]
        return d

    def eval_n(u: Array) -> float:
        return float(np.sum(np.abs(diffs(u)) ** p)) / hp

    def grad_n(u: Array) -> Array:
        s = _signed_power(diffs(u), p - 1.0)
        return p * (s[:-1] - s[1:]) / hp

    def eval_a(u: Array) -> float:
        return h * float(np.sum(np.abs(u) ** q))

    def grad_a(u: Array) -> Array:
        return h * q * _signed_power(u, q - 1.0)

    def eval_b(u: Array) -> float:
        return h * float(np.sum(np.abs(u) ** r))

    def grad_b(u: Array) -> Array:
        return h * r * _signed_power(u, r - 1.0)

    label = f"plap1d(p={p:g}, q={q:g}, r={r:g}, m={m})"
    return FunctionalTriple(tag=tag, dim=m, eval_n=eval_n, eval_a=eval_a,
                            eval_b=eval_b, grad_n=grad_n, grad_a=grad_a,
                            grad_b=grad_b, label=label,
                            meta={"mesh1d": True, "p": p, "q": q, "r": r,
                                  "m": m, "h": h})


def make_diag(tag: ClassTag, n_w, a_w, b_w) -> FunctionalTriple:
    """Diagonal surrogate with power sums sum w_i |u_i|^deg per functional.

    Weight vectors must be positive and of equal length.  For two-term tags
    with negative B convention the B sum is negated.
    """
    n_w = np.asarray(n_w, dtype=float)
    a_w = np.asarray(a_w, dtype=float)
    b_w = np.asarray(b_w, dtype=float)
    if not (n_w.size == a_w.size == b_w.size) or n_w.size == 0:
        raise BadExponents("weight vectors must share a positive length")
    if np.any(n_w <= 0) or np.any(a_w <= 0) or np.any(b_w <= 0):
        raise BadExponents("weights must be positive")
    d = n_w.size
    eta, beta, da = tag.eta, tag.beta, tag.deg_a
    bs = float(tag.b_sign)

    def eval_n(u):
        return float(n_w @ np.abs(u) ** eta)

    def grad_n(u):
        return eta * n_w * _signed_power(u, eta - 1.0)

    def eval_a(u):
        return float(a_w @ np.abs(u) ** da)

    def grad_a(u):
        return da * a_w * _signed_power(u, da - 1.0)

    def eval_b(u):
        return bs * float(b_w @ np.abs(u) ** beta)

    def grad_b(u):
        return bs * beta * b_w * _signed_power(u, beta - 1.0)

    label = f"diag({tag.variant}, d={d})"
    return FunctionalTriple(tag=tag, dim=d, eval_n=eval_n, eval_a=eval_a,
                            eval_b=eval_b, grad_n=grad_n, grad_a=grad_a,
                            grad_b=grad_b, label=label)


def make_sp_surrogate(d: int, n_w, a_w, b_w, p: float,
                      probe_points: int = 12) -> FunctionalTriple:
    """SP-like surrogate: quadratic N, quartic squared-sum A, p-power B.

    Degrees are (2, p, 4) with p in the open interval (2, 3).  An empirical
    coercivity probe scans sublevel growth along a direction grid; failure
    flags the instance with a CoercivityUnverified warning instead of
    raising.
    """
    if not 2.0 < p < 3.0:
        raise BadExponents("B exponent p must lie strictly in (2, 3)")
    n_w = np.asarray(n_w, dtype=float)
    a_w = np.asarray(a_w, dtype=float)
    b_w = np.asarray(b_w, dtype=float)
    if not (n_w.size == a_w.size == b_w.size == d) or d <= 0:
        raise BadExponents("weight vectors must have length d")
    if np.any(n_w <= 0) or np.any(a_w <= 0) or np.any(b_w <= 0):
        raise BadExponents("weights must be positive")
    tag = classes.sp_like(2.0, p, 4.0)

    def eval_n(u):
        return float(n_w @ (u * u))

    def grad_n(u):
        return 2.0 * n_w * u

    def eval_a(u):
        s = float(a_w @ (u * u))
        return s * s

    def grad_a(u):
        s = float(a_w @ (u * u))
        return 4.0 * s * a_w * u

    def eval_b(u):
        return float(b_w @ np.abs(u) ** p)

    def grad_b(u):
        return p * b_w * _signed_power(u, p - 1.0)

    ok = _probe_coercivity(tag, eval_n, eval_a, eval_b, d, probe_points)
    if not ok:
        warnings.warn("coercivity probe failed on the direction grid; "
                      "sublevel boundedness unverified", CoercivityUnverified)
    label = f"sp_surrogate(d={d}, p={p:g})"
    return FunctionalTriple(tag=tag, dim=d, eval_n=eval_n, eval_a=eval_a,
                            eval_b=eval_b, grad_n=grad_n, grad_a=grad_a,
                            grad_b=grad_b, label=label, coercivity_ok=ok)


def _probe_coercivity(tag, eval_n, eval_a, eval_b, d, probe_points,
                      a_floor: float = 1e-3, growth: float = 1e3) -> bool:
    """Check that sublevel sets of phi_a stay bounded along probe rays.

    For quartic-dominant instances phi_a(t w) must eventually grow along
    every ray once the parameter is positive; sampling directions and a log
    norm grid gives an inexpensive falsification test.
    """
    rng = np.random.default_rng(0)
    dirs = [np.eye(d)[i] for i in range(min(d, 4))]
    dirs.append(np.full(d, 1.0 / np.sqrt(d)))
    while len(dirs) < probe_points:
        w = rng.standard_normal(d)
        dirs.append(w / np.linalg.norm(w))
    s = tag.i2_sign
    da = tag.deg_a
    for w in dirs:
        n, a, b = eval_n(w), eval_a(w), eval_b(w)
        for t in np.geomspace(1.0, 1e4, 25):
            val = (n * t ** tag.eta / tag.eta - b * t ** tag.beta / tag.beta
                   - a_floor * s * a * t ** da / da)
            if val > growth:
                break
        else:
            return False
    return True
