"""Critical points of the reduced objectives on the unit sphere.

The sphere is a natural constraint for the 0-homogeneous reduced objectives:
tangentially critical directions are fully critical, and rescaling a
direction by its branch scale reconstructs a solution of the original
system.  The solver is a spectral projected gradient loop: tangential step,
normalization retraction, Barzilai-Borwein trial step with nonmonotone
Armijo backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BranchUnavailable, DegenerateFiber, NoConvergence, RejectedPair
from .reduction import CriticalPair, eval_lambda, eval_mu, solve_scale, verify_pair
from .triple import FunctionalTriple

Array = np.ndarray

_EPS = np.finfo(float).eps


@dataclass
class OptimizerConfig:
    """Budget and step-rule parameters shared by all iterative solvers."""

    max_iters: int = 4000
    grad_tol: float = 1e-9
    # Outer (frame) loops stop at a looser tolerance: the witness residual
    # carries an extra factor I2(tu)/t, so 1e-6 here still verifies at 1e-6.
    level_grad_tol: float = 1e-6
    armijo_init: float = 1.0
    armijo_factor: float = 0.5
    armijo_slope: float = 1e-4
    nonmonotone_window: int = 8
    multistart: int = 8
    frame_multistart: int = 3
    track_iters: int = 200
    seed: int = 42
    verify_grad_tol: float = 1e-6
    verify_energy_tol: float = 1e-8

    def __post_init__(self):
        if self.grad_tol < _EPS * 1e3:
            raise ValueError("grad_tol below 1e3 * machine epsilon")
        if self.multistart < 1:
            raise ValueError("multistart must be at least 1")


@dataclass
class SphereResult:
    w: Array
    value: float
    grad_norm: float
    iters: int
    converged: bool


def _normalize(x: Array) -> Array:
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise ValueError("zero vector cannot be normalized")
    return x / nrm


def sphere_extremize(fun_grad, w0: Array, cfg: OptimizerConfig,
                     maximize: bool = False) -> SphereResult:
    """Spectral projected gradient on the unit sphere.

    ``fun_grad(w)`` returns the objective value and its tangential gradient
    at a unit vector w.  Steps follow the sign convention of minimization;
    set ``maximize`` to flip.
    """
    sgn = -1.0 if maximize else 1.0
    w = _normalize(np.asarray(w0, dtype=float))
    if w.size == 1:
        f, g = fun_grad(w)
        return SphereResult(w=w, value=f, grad_norm=0.0, iters=0, converged=True)

    f, g = fun_grad(w)
    f_s, g_s = sgn * f, sgn * g
    gnorm = float(np.linalg.norm(g_s))
    recent = [f_s]
    step = cfg.armijo_init / max(1.0, gnorm)
    prev_w = prev_g = None
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if gnorm <= cfg.grad_tol * max(1.0, abs(f_s)):
            return SphereResult(w=w, value=sgn * f_s, grad_norm=gnorm,
                                iters=it - 1, converged=True)
        if prev_w is not None:
            dw = w - prev_w
            dg = g_s - prev_g
            denom = float(dw @ dg)
            if abs(denom) > 1e-300:
                step = abs(float(dw @ dw) / denom)
            step = min(max(step, 1e-14), 1e14)
        f_ref = max(recent)
        accepted = False
        s = step
        for _ in range(60):
            w_try = _normalize(w - s * g_s)
            f_try, g_try = fun_grad(w_try)
            f_try_s = sgn * f_try
            if np.isfinite(f_try_s) and \
                    f_try_s <= f_ref - cfg.armijo_slope * s * gnorm * gnorm:
                accepted = True
                break
            s *= cfg.armijo_factor
        if not accepted:
            break
        prev_w, prev_g = w, g_s
        w, f_s, g_s = w_try, f_try_s, sgn * g_try
        gnorm = float(np.linalg.norm(g_s))
        recent.append(f_s)
        if len(recent) > cfg.nonmonotone_window:
            recent.pop(0)
    converged = gnorm <= cfg.grad_tol * max(1.0, abs(f_s))
    return SphereResult(w=w, value=sgn * f_s, grad_norm=gnorm, iters=it,
                        converged=converged)


def _lambda_objective(triple: FunctionalTriple, c: float, branch: str):
    """Reduced objective closure; infeasible directions map to +inf."""

    big = float("inf")

    def fun_grad(w):
        try:
            red = eval_lambda(triple, c, w, branch)
        except (BranchUnavailable, DegenerateFiber):
            return big, np.zeros_like(w)
        return red.lam, red.grad_tangential
    return fun_grad


def start_pool(dim: int, cfg: OptimizerConfig, warm=None) -> list[Array]:
    """Multistart directions: warm starts, coordinate axes, random points."""
    pool: list[Array] = []
    if warm is not None:
        for w in warm:
            w = np.asarray(w, dtype=float)
            if np.any(w):
                pool.append(_normalize(w))
    for i in range(min(dim, max(0, cfg.multistart - len(pool)))):
        e = np.zeros(dim)
        e[i] = 1.0
        pool.append(e)
    rng = np.random.default_rng(cfg.seed)
    while len(pool) < cfg.multistart:
        pool.append(_normalize(rng.standard_normal(dim)))
    return pool


def extremize_reduced(triple: FunctionalTriple, c: float, branch: str,
                      cfg: OptimizerConfig, warm=None) -> SphereResult:
    """Best sphere extremizer of the reduced objective over the start pool.

    Minimizes for the inf-sup classes and maximizes for the sup-inf class.
    """
    maximize = triple.tag.direction == "sup_inf"
    fun_grad = _lambda_objective(triple, c, branch)
    best: SphereResult | None = None
    for w0 in start_pool(triple.dim, cfg, warm=warm):
        res = sphere_extremize(fun_grad, w0, cfg, maximize=maximize)
        if not np.isfinite(res.value):
            continue
        if best is None:
            best = res
            continue
        better = res.value < best.value if not maximize else res.value > best.value
        if res.converged and not best.converged:
            best = res
        elif res.converged == best.converged and better:
            best = res
    if best is None or not np.isfinite(best.value):
        raise NoConvergence(
            f"no feasible start for branch {branch!r} at c={c:g}")
    return best


def _pair_from_direction(triple: FunctionalTriple, c: float, w: Array,
                         branch: str, cfg: OptimizerConfig,
                         level: int | None = None) -> CriticalPair:
    t = solve_scale(triple, c, w, branch)
    u = t * w
    mu = eval_mu(triple, c, u)
    return verify_pair(triple, mu, c, u, branch=branch, level=level,
                       grad_tol=cfg.verify_grad_tol,
                       energy_tol=cfg.verify_energy_tol)


def minimize_reduced(triple: FunctionalTriple, c: float, branch: str,
                     cfg: OptimizerConfig | None = None,
                     warm=None) -> CriticalPair:
    """Ground-level critical pair: extremize the reduced objective over the
    sphere and rescale the best direction onto the constraint set.

    The returned pair always passes residual verification; NoConvergence is
    raised with the best gradient norm if no start reaches tolerance.
    """
    cfg = cfg or OptimizerConfig()
    best = extremize_reduced(triple, c, branch, cfg, warm=warm)
    if not best.converged:
        raise NoConvergence(
            f"gradient norm {best.grad_norm:.3e} above tolerance after "
            f"{best.iters} iterations", best_residual=best.grad_norm)
    try:
        return _pair_from_direction(triple, c, best.w, branch, cfg, level=1)
    except RejectedPair as exc:
        raise NoConvergence(
            f"extremizer failed verification: {exc}",
            best_residual=exc.residual_grad) from exc


def refine_critical(triple: FunctionalTriple, c: float, u0: Array,
                    branch: str, cfg: OptimizerConfig | None = None) -> CriticalPair:
    """Local tangential descent (or ascent) from a given direction."""
    cfg = cfg or OptimizerConfig()
    if not np.any(u0):
        raise ValueError("u0 must be nonzero")
    maximize = triple.tag.direction == "sup_inf"
    fun_grad = _lambda_objective(triple, c, branch)
    res = sphere_extremize(fun_grad, _normalize(np.asarray(u0, float)), cfg,
                           maximize=maximize)
    if not res.converged or not np.isfinite(res.value):
        raise NoConvergence(
            f"refinement stalled at gradient norm {res.grad_norm:.3e}",
            best_residual=res.grad_norm)
    try:
        return _pair_from_direction(triple, c, res.w, branch, cfg)
    except RejectedPair as exc:
        raise NoConvergence(
            f"refined point failed verification: {exc}",
            best_residual=exc.residual_grad) from exc
