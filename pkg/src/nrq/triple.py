"""Functional triples (N, A, B) with gradients and the induced energy family.

A triple packages the three homogeneous functionals of one instance together
with its class tag.  The derived quantities used everywhere else are

    i1(u)  = N(u)/eta - B(u)/beta
    i2(u)  = s * A(u)/deg_a          (s = -1 for the SP-like class)
    phi(mu, u) = i1(u) - mu * i2(u)

All evaluators act on 1-d coefficient vectors of length ``dim``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .classes import ClassTag

Array = np.ndarray


@dataclass(frozen=True)
class FunctionalTriple:
    tag: ClassTag
    dim: int
    eval_n: Callable[[Array], float]
    eval_a: Callable[[Array], float]
    eval_b: Callable[[Array], float]
    grad_n: Callable[[Array], Array]
    grad_a: Callable[[Array], Array]
    grad_b: Callable[[Array], Array]
    label: str = ""
    # Result of the empirical sublevel-boundedness probe for SP surrogates;
    # None means the probe does not apply to this instance.
    coercivity_ok: bool | None = None
    meta: dict = field(default_factory=dict)

    def nab(self, u: Array) -> tuple[float, float, float]:
        """Evaluate the three scalars (N, A, B) at u."""
        return self.eval_n(u), self.eval_a(u), self.eval_b(u)

    def grads(self, u: Array) -> tuple[Array, Array, Array]:
        return self.grad_n(u), self.grad_a(u), self.grad_b(u)

    def i1(self, u: Array) -> float:
        n, _, b = self.nab(u)
        return n / self.tag.eta - b / self.tag.beta

    def i2(self, u: Array) -> float:
        return self.tag.i2_sign * self.eval_a(u) / self.tag.deg_a

    def phi(self, mu: float, u: Array) -> float:
        n, a, b = self.nab(u)
        t = self.tag
        return n / t.eta - b / t.beta - mu * t.i2_sign * a / t.deg_a

    def grad_phi(self, mu: float, u: Array) -> Array:
        gn, ga, gb = self.grads(u)
        t = self.tag
        return gn / t.eta - gb / t.beta - (mu * t.i2_sign / t.deg_a) * ga


def euler_residuals(triple: FunctionalTriple, u: Array) -> tuple[float, float, float]:
    """Relative Euler-identity residuals (<g,u> - deg*value)/scale at u.

    Zero for exactly homogeneous evaluators; used as a structural check on
    every built instance.
    """
    t = triple.tag
    n, a, b = triple.nab(u)
    gn, ga, gb = triple.grads(u)
    degs = (t.eta, t.deg_a, t.beta)
    vals = (n, a, b)
    pairs = (float(gn @ u), float(ga @ u), float(gb @ u))
    out = []
    for d, v, p in zip(degs, vals, pairs):
        scale = max(abs(d * v), 1e-300)
        out.append(abs(p - d * v) / scale)
    return tuple(out)


def check_euler(triple: FunctionalTriple, rng: np.random.Generator,
                points: int = 20, rtol: float = 1e-9) -> float:
    """Max relative Euler residual over random sample points.

    Raises AssertionError when the residual exceeds ``rtol``.
    """
    worst = 0.0
    for _ in range(points):
        u = rng.standard_normal(triple.dim)
        u[np.abs(u) < 1e-3] = 1e-3  # stay away from kinks of |x|^q for q < 2
        worst = max(worst, *euler_residuals(triple, u))
    if worst > rtol:
        raise AssertionError(
            f"Euler identity violated on {triple.label or 'instance'}: "
            f"residual {worst:.3e} > {rtol:.1e}")
    return worst
