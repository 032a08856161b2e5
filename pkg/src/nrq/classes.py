"""Structural class tags for the supported families of homogeneous functionals.

Every instance decomposes as ``phi_mu = I1 - mu*I2`` with
``I1 = N/eta - B/beta`` and ``I2 = sign * A/deg_a``.  The class tag pins the
homogeneity degrees, the sign convention of ``I2`` and of ``B``, and the
direction (inf-sup vs sup-inf) in which multi-level values are defined.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BadExponents

TWO_TERM_SUPER = "two_term_super"
TWO_TERM_SUB = "two_term_sub"
CONCAVE_CONVEX = "concave_convex"
SP_LIKE = "sp_like"

VARIANTS = (TWO_TERM_SUPER, TWO_TERM_SUB, CONCAVE_CONVEX, SP_LIKE)


@dataclass(frozen=True)
class ClassTag:
    """Exponent triple and sign conventions of one structural class.

    ``alpha`` is the homogeneity degree of A when it differs from ``eta``
    (concave-convex and SP-like classes); it must be None for the two-term
    classes.  ``b_sign`` is +1 when B > 0 on nonzero vectors and -1 when
    B < 0 (two-term classes only).
    """

    variant: str
    eta: float
    beta: float
    alpha: float | None = None
    b_sign: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise BadExponents(f"unknown variant {self.variant!r}")
        if self.eta <= 1.0 or self.beta <= 1.0:
            raise BadExponents("all exponents must exceed 1")
        if self.b_sign not in (1, -1):
            raise BadExponents("b_sign must be +1 or -1")
        if self.variant == TWO_TERM_SUPER:
            if self.alpha is not None:
                raise BadExponents("two-term classes take no alpha")
            if not self.eta < self.beta:
                raise BadExponents("two_term_super needs eta < beta")
        elif self.variant == TWO_TERM_SUB:
            if self.alpha is not None:
                raise BadExponents("two-term classes take no alpha")
            if not self.beta < self.eta:
                raise BadExponents("two_term_sub needs beta < eta")
        elif self.variant == CONCAVE_CONVEX:
            if self.alpha is None or self.alpha <= 1.0:
                raise BadExponents("concave_convex needs alpha > 1")
            if not self.alpha < self.eta < self.beta:
                raise BadExponents("concave_convex needs alpha < eta < beta")
            if self.b_sign != 1:
                raise BadExponents("concave_convex requires positive B")
        elif self.variant == SP_LIKE:
            if self.alpha is None or self.alpha <= 1.0:
                raise BadExponents("sp_like needs alpha > 1")
            if not self.eta < self.beta < self.alpha:
                raise BadExponents("sp_like needs eta < beta < alpha")
            if self.b_sign != 1:
                raise BadExponents("sp_like requires positive B")

    # -- structural constants -------------------------------------------------

    @property
    def is_two_term(self) -> bool:
        return self.variant in (TWO_TERM_SUPER, TWO_TERM_SUB)

    @property
    def deg_a(self) -> float:
        """Homogeneity degree of A."""
        return self.eta if self.is_two_term else float(self.alpha)

    @property
    def i2_sign(self) -> int:
        """Sign of I2 = i2_sign * A/deg_a (negative in the SP-like class)."""
        return -1 if self.variant == SP_LIKE else 1

    @property
    def direction(self) -> str:
        """Multi-level direction: 'inf_sup' or 'sup_inf'."""
        return "sup_inf" if self.variant == SP_LIKE else "inf_sup"

    @property
    def curve_direction(self) -> str:
        """Predicted monotonicity of c -> value along one level curve."""
        return "increasing" if self.variant == SP_LIKE else "decreasing"

    @property
    def has_threshold(self) -> bool:
        """Whether a per-direction degeneracy threshold c(u) exists."""
        return not self.is_two_term

    @property
    def max_degree(self) -> float:
        return max(self.eta, self.beta, self.deg_a)

    # -- branch availability ---------------------------------------------------

    def two_term_branch(self, c: float) -> str | None:
        """Branch of the unique fiber critical point at energy c, or None.

        For the two-term classes the critical scale exists exactly when
        c/B(u) has the sign of beta - eta; it is a maximizer for c > 0 and a
        minimizer for c < 0.
        """
        if not self.is_two_term:
            raise BadExponents("two_term_branch applies to two-term classes")
        if c == 0.0:
            return None
        admissible = (c > 0) == ((self.beta - self.eta) * self.b_sign > 0)
        if not admissible:
            return None
        return "minus" if c > 0 else "plus"

    def branch_interval(self, branch: str, cstar: float | None = None):
        """Open interval of energies where ``branch`` exists for every u.

        For the threshold classes the interval depends on the extremal
        threshold ``cstar``; pass float('-inf')/float('inf') bounds when it
        is unknown.
        """
        inf = float("inf")
        if self.is_two_term:
            b = self.two_term_branch(1.0 if branch == "minus" else -1.0)
            if b != branch:
                return None
            return (0.0, inf) if branch == "minus" else (-inf, 0.0)
        if cstar is None:
            cstar = -0.0 if self.variant == CONCAVE_CONVEX else inf
        if self.variant == CONCAVE_CONVEX:
            return (cstar, 0.0) if branch == "plus" else (cstar, inf)
        return (0.0, cstar) if branch == "plus" else (-inf, cstar)


def two_term_super(eta: float, beta: float, b_sign: int = 1) -> ClassTag:
    return ClassTag(TWO_TERM_SUPER, eta, beta, b_sign=b_sign)


def two_term_sub(eta: float, beta: float, b_sign: int = 1) -> ClassTag:
    return ClassTag(TWO_TERM_SUB, eta, beta, b_sign=b_sign)


def concave_convex(alpha: float, eta: float, beta: float) -> ClassTag:
    return ClassTag(CONCAVE_CONVEX, eta, beta, alpha=alpha)


def sp_like(eta: float, beta: float, alpha: float) -> ClassTag:
    return ClassTag(SP_LIKE, eta, beta, alpha=alpha)
