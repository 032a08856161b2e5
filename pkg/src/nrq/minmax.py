"""One-sided estimates of multi-level critical values via subspace spheres.

Spheres of n-dimensional subspaces are compact symmetric sets of topological
index n, so extremizing the reduced objective over them bounds the n-th
level from one side: inf-sup estimates are upper bounds, sup-inf estimates
lower bounds.  The outer loop optimizes a d-by-n orthonormal frame with an
envelope gradient taken at the inner extremizer; the inner loop reuses the
sphere engine in n dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classes import CONCAVE_CONVEX
from .errors import BadExponents, BranchUnavailable, DegenerateFiber, \
    NoConvergence, RejectedPair
from .optimize import OptimizerConfig, SphereResult, _normalize, \
    extremize_reduced, sphere_extremize, start_pool
from .reduction import CriticalPair, eval_lambda, eval_mu, rayleigh_quotient, \
    solve_scale, threshold_gradient, threshold_value, verify_pair
from .triple import FunctionalTriple

Array = np.ndarray


@dataclass
class MinMaxSpec:
    """Level estimate with its witness subspace and inner extremizer."""

    n: int
    branch: str
    direction: str
    witness: Array            # d x n orthonormal frame
    value: float
    inner_certificates: list  # unit directions attaining the inner extremum
    pair: CriticalPair | None
    iters: int
    converged: bool
    collapsed: bool | None = None


def _objective(triple: FunctionalTriple, c: float, branch: str):
    """Reduced objective on arbitrary nonzero vectors, with gradient."""
    if triple.tag.is_two_term and c == 0.0:
        def fun_grad(u):
            n, a, _ = triple.nab(u)
            gn, ga, _ = triple.grads(u)
            val = n / a
            grad = (gn - val * ga) / a
            w = u / np.linalg.norm(u)
            grad = grad - float(grad @ w) * w
            return val, grad
        return fun_grad

    def fun_grad(u):
        try:
            red = eval_lambda(triple, c, u, branch)
        except (BranchUnavailable, DegenerateFiber):
            return float("inf"), np.zeros_like(u)
        return red.lam, red.grad_tangential
    return fun_grad


def _inner_extremize(fun_grad, frame: Array, cfg: OptimizerConfig,
                     inner_max: bool, warm_y: Array | None = None,
                     track: bool = False) -> SphereResult:
    """Extremize the objective over the sphere of the frame's span.

    With ``track`` the solve follows the warm start only (cheap, used inside
    outer line searches); otherwise a small multistart pool over the inner
    sphere guards against jumping extremizers.
    """
    n = frame.shape[1]

    def fg(y):
        u = frame @ y
        val, grad_u = fun_grad(u)
        return val, frame.T @ grad_u

    from dataclasses import replace
    inner_cfg = replace(cfg, multistart=max(2 * n, 4), seed=cfg.seed + 1,
                        max_iters=cfg.track_iters if track else cfg.max_iters)
    if track and warm_y is not None:
        res = sphere_extremize(fg, warm_y, inner_cfg, maximize=inner_max)
        if np.isfinite(res.value):
            return res
    warm = [warm_y] if warm_y is not None else None
    best: SphereResult | None = None
    for y0 in start_pool(n, inner_cfg, warm=warm):
        res = sphere_extremize(fg, y0, inner_cfg, maximize=inner_max)
        if not np.isfinite(res.value):
            continue
        if best is None or (res.value > best.value) == inner_max:
            best = res
    if best is None:
        raise BranchUnavailable("inner problem infeasible on this subspace")
    return best


def _orth(frame: Array, mask: Array | None) -> Array:
    """Orthonormalize a frame; disjoint-support frames normalize columnwise."""
    if mask is not None:
        frame = frame * mask
        norms = np.linalg.norm(frame, axis=0)
        if np.any(norms == 0.0):
            raise ValueError("masked frame column collapsed to zero")
        return frame / norms
    q, _ = np.linalg.qr(frame)
    return q


def _frame_pool(dim: int, n: int, cfg: OptimizerConfig,
                warm_frame) -> list[Array]:
    pool = []
    if warm_frame is not None and warm_frame.shape == (dim, n):
        pool.append(_orth(warm_frame, None))
    ident = np.zeros((dim, n))
    for j in range(n):
        ident[j % dim, j] = 1.0
    pool.append(_orth(ident + 1e-8, None))
    rng = np.random.default_rng(cfg.seed + 7)
    count = max(cfg.frame_multistart, 1)
    while len(pool) < count:
        pool.append(_orth(rng.standard_normal((dim, n)), None))
    return pool[:count]


def _outer_solve(triple: FunctionalTriple, c: float, n: int, branch: str,
                 cfg: OptimizerConfig, frame0: Array,
                 mask: Array | None) -> tuple[Array, SphereResult, float, int, bool]:
    """Frame descent with envelope gradients and QR retraction.

    Inner extrema are tracked with warm single starts during the line
    search; when the loop settles, a full multistart inner solve certifies
    the extremizer and restarts the descent if it had jumped.
    """
    fun_grad = _objective(triple, c, branch)
    sup_inf = triple.tag.direction == "sup_inf"
    inner_max = not sup_inf
    sgn = -1.0 if sup_inf else 1.0  # minimize sgn * outer value

    def envelope(frame, inner):
        u = frame @ inner.w
        _, g_u = fun_grad(u)
        grad = np.outer(g_u, inner.w)
        if mask is not None:
            grad = grad * mask
        return grad - frame @ (frame.T @ grad)

    frame = frame0.copy()
    inner = _inner_extremize(fun_grad, frame, cfg, inner_max)
    val = inner.value
    total_it = 0
    converged = False
    for _restart in range(4):
        grad = envelope(frame, inner)
        gnorm = float(np.linalg.norm(grad))
        recent = [sgn * val]
        step = cfg.armijo_init / max(1.0, gnorm)
        prev_f = prev_g = None
        while total_it < cfg.max_iters:
            if gnorm <= cfg.level_grad_tol * max(1.0, abs(val)):
                converged = True
                break
            total_it += 1
            if prev_f is not None:
                df = frame - prev_f
                dg = grad - prev_g
                denom = float(np.sum(df * dg))
                if abs(denom) > 1e-300:
                    step = abs(float(np.sum(df * df)) / denom)
                step = min(max(step, 1e-14), 1e14)
            f_ref = max(recent)
            s = step
            accepted = False
            for _ in range(60):
                try:
                    f_try = _orth(frame - (sgn * s) * grad, mask)
                except ValueError:
                    s *= cfg.armijo_factor
                    continue
                inner_try = _inner_extremize(fun_grad, f_try, cfg, inner_max,
                                             warm_y=inner.w, track=True)
                val_try = inner_try.value
                if np.isfinite(val_try) and \
                        sgn * val_try <= f_ref - cfg.armijo_slope * s * gnorm * gnorm:
                    accepted = True
                    break
                s *= cfg.armijo_factor
            if not accepted:
                break
            prev_f, prev_g = frame, grad
            frame, inner, val = f_try, inner_try, val_try
            grad = envelope(frame, inner)
            gnorm = float(np.linalg.norm(grad))
            recent.append(sgn * val)
            if len(recent) > cfg.nonmonotone_window:
                recent.pop(0)
        # certify the inner extremizer with a fresh multistart solve
        fresh = _inner_extremize(fun_grad, frame, cfg, inner_max,
                                 warm_y=inner.w)
        moved = (fresh.value > val) == inner_max and \
            abs(fresh.value - val) > 1e-12 * max(1.0, abs(val))
        inner, val = fresh, fresh.value
        if not moved:
            break
        converged = False
    return frame, inner, val, total_it, converged


def _certify(triple: FunctionalTriple, c: float, branch: str, n: int,
             w: Array, cfg: OptimizerConfig) -> CriticalPair | None:
    if triple.tag.is_two_term and c == 0.0:
        return None  # zero-energy limit: the reconstructed scale vanishes
    try:
        t = solve_scale(triple, c, w, branch)
        u = t * w
        mu = eval_mu(triple, c, u)
        return verify_pair(triple, mu, c, u, branch=branch, level=n,
                           grad_tol=cfg.verify_grad_tol,
                           energy_tol=cfg.verify_energy_tol)
    except (RejectedPair, BranchUnavailable, DegenerateFiber):
        return None


def estimate_level(triple: FunctionalTriple, c: float, n: int, branch: str,
                   cfg: OptimizerConfig | None = None,
                   warm_frame: Array | None = None,
                   prev_value: float | None = None,
                   collapse_rtol: float = 1e-6) -> MinMaxSpec:
    """Level-n one-sided estimate over n-dimensional subspace spheres.

    Alternates inner sphere extremization with frame updates.  The value is
    an upper bound of the true level for inf-sup classes and a lower bound
    for the sup-inf class.  When ``prev_value`` (the level n-1 estimate) is
    supplied, a near-coincidence is reported through the ``collapsed`` flag.
    """
    cfg = cfg or OptimizerConfig()
    if n < 1 or n > triple.dim:
        raise ValueError(f"level n={n} outside 1..dim={triple.dim}")
    direction = triple.tag.direction

    if n == 1:
        if triple.tag.is_two_term and c == 0.0:
            fun_grad = _objective(triple, c, branch)
            best = None
            for w0 in start_pool(triple.dim, cfg):
                res = sphere_extremize(fun_grad, w0, cfg, maximize=False)
                if best is None or res.value < best.value:
                    best = res
            w = best.w
            spec = MinMaxSpec(n=1, branch=branch, direction=direction,
                              witness=w[:, None], value=best.value,
                              inner_certificates=[w], pair=None,
                              iters=best.iters, converged=best.converged)
        else:
            best = extremize_reduced(triple, c, branch, cfg,
                                     warm=None if warm_frame is None
                                     else [warm_frame[:, 0]])
            pair = _certify(triple, c, branch, 1, best.w, cfg)
            spec = MinMaxSpec(n=1, branch=branch, direction=direction,
                              witness=best.w[:, None], value=best.value,
                              inner_certificates=[best.w], pair=pair,
                              iters=best.iters, converged=best.converged)
    else:
        sup_inf = direction == "sup_inf"
        best = None
        best_score = None
        for frame0 in _frame_pool(triple.dim, n, cfg, warm_frame):
            frame, inner, val, iters, conv = _outer_solve(
                triple, c, n, branch, cfg, frame0, None)
            if not np.isfinite(val):
                continue
            score = (conv, val if sup_inf else -val)
            if best is None or score > best_score:
                best = (frame, inner, val, iters, conv)
                best_score = score
        if best is None:
            raise NoConvergence(f"all frame starts infeasible at c={c:g}")
        frame, inner, val, iters, conv = best
        w = _normalize(frame @ inner.w)
        pair = _certify(triple, c, branch, n, w, cfg)
        spec = MinMaxSpec(n=n, branch=branch, direction=direction,
                          witness=frame, value=val, inner_certificates=[w],
                          pair=pair, iters=iters, converged=conv)
    if not spec.converged and spec.pair is None:
        raise NoConvergence(
            f"level {n} estimate stalled at value {spec.value:.6g}")
    if prev_value is not None:
        gap = abs(spec.value - prev_value)
        spec.collapsed = gap <= collapse_rtol * max(1.0, abs(spec.value))
    return spec


def nodal_level_1d(triple: FunctionalTriple, c: float, n: int,
                   cfg: OptimizerConfig | None = None) -> MinMaxSpec:
    """Level-n bound from n-block alternating sign patterns on a 1-d mesh.

    Candidate sets are spheres of frames with disjoint contiguous supports
    separated by forced zero nodes; block shapes and breakpoints are both
    optimized.  The value is an upper bound for inf-sup classes.
    """
    cfg = cfg or OptimizerConfig()
    if not triple.meta.get("mesh1d"):
        raise BadExponents("nodal levels require a 1-d mesh instance")
    if triple.tag.direction != "inf_sup":
        raise BadExponents("nodal bounds are defined for inf-sup classes")
    m = triple.dim
    if n < 1 or 2 * n - 1 > m:
        raise ValueError(f"level n={n} needs at least {2*n-1} mesh nodes")

    def masks_from(zeros: list[int]) -> Array:
        mask = np.zeros((m, n))
        bounds = [-1] + list(zeros) + [m]
        for j in range(n):
            mask[bounds[j] + 1: bounds[j + 1], j] = 1.0
        return mask

    def seed_frame(mask: Array) -> Array:
        frame = np.zeros((m, n))
        for j in range(n):
            idx = np.nonzero(mask[:, j])[0]
            x = np.arange(1, idx.size + 1) / (idx.size + 1)
            frame[idx, j] = np.sin(np.pi * x)
        return _orth(frame, mask)

    if triple.tag.is_two_term:
        branch = triple.tag.two_term_branch(c)
        if branch is None and c != 0.0:
            raise BranchUnavailable(f"no branch at c={c:g} for this class")
        branch = branch or "minus"  # c = 0: quotient objective, branch unused
    else:
        branch = "minus" if c >= 0.0 else "plus"

    def solve(zeros: list[int], warm: Array | None):
        mask = masks_from(zeros)
        frame0 = seed_frame(mask) if warm is None else \
            _orth(warm * mask + 1e-12 * mask, mask)
        return _outer_solve(triple, c, n, branch, cfg, frame0, mask), mask

    def admissible(zeros: list[int]) -> bool:
        bounds = [-1] + zeros + [m]
        return all(bounds[j + 1] - bounds[j] >= 2 for j in range(n))

    zeros = [round((j + 1) * m / n) - 1 for j in range(n - 1)]
    (frame, inner, val, iters, conv), mask = solve(zeros, None)

    if n > 1:
        for _ in range(m):
            improved = False
            for j in range(n - 1):
                for dz in (-1, 1):
                    trial = list(zeros)
                    trial[j] += dz
                    if not admissible(trial):
                        continue
                    try:
                        (f2, i2, v2, it2, c2), m2 = solve(trial, frame)
                    except (ValueError, BranchUnavailable):
                        continue
                    if v2 < val - 1e-12 * max(1.0, abs(val)):
                        zeros, frame, inner, val, conv, mask = \
                            trial, f2, i2, v2, c2, m2
                        iters += it2
                        improved = True
            if not improved:
                break

    y = inner.w
    loadings = np.abs(y)
    if np.min(loadings) <= 1e-12:
        loadings = np.full(n, 1.0 / np.sqrt(n))
    signs = np.array([(-1.0) ** j for j in range(n)])
    witness_dir = _normalize(frame @ (signs * loadings))
    pair = _certify(triple, c, branch, n, _normalize(frame @ y), cfg)
    return MinMaxSpec(n=n, branch=branch, direction="inf_sup", witness=frame,
                      value=val, inner_certificates=[witness_dir], pair=pair,
                      iters=iters, converged=conv)


def estimate_cstar(triple: FunctionalTriple,
                   cfg: OptimizerConfig | None = None) -> float:
    """Extremal degeneracy threshold over the unit sphere.

    Maximizes the per-direction threshold for the concave-convex class
    (where it is negative) and minimizes it for the SP-like class (where it
    is positive).
    """
    cfg = cfg or OptimizerConfig()
    tag = triple.tag
    if not tag.has_threshold:
        raise BranchUnavailable(
            "two-term classes have no degeneracy threshold")
    maximize = tag.variant == CONCAVE_CONVEX

    def fun_grad(u):
        val = threshold_value(triple, u)
        grad = threshold_gradient(triple, u)
        w = u / np.linalg.norm(u)
        return val, grad - float(grad @ w) * w

    best = None
    best_score = None
    for w0 in start_pool(triple.dim, cfg):
        res = sphere_extremize(fun_grad, w0, cfg, maximize=maximize)
        score = (res.converged, res.value if maximize else -res.value)
        if best is None or score > best_score:
            best, best_score = res, score
    if not best.converged and triple.dim > 1:
        raise NoConvergence(
            f"threshold extremization stalled at {best.value:.6g}",
            best_residual=best.grad_norm)
    return best.value
