"""The two income-density families and their closed-form moments.

The primary family is

    rho(r) = c r^alpha / (e^(beta r) - 1),

a Bose-Einstein occupation profile over income r, and the baseline is
the gamma shape c r^alpha e^(-beta r).  The two agree to within
e^(-beta r) relative once beta r is large, which is why fitted curves
look gamma-like in the tail while splitting apart near r = 0.

Moments come from I(a) = int_0^inf x^a/(e^x - 1) dx = Gamma(a+1)
zeta(a+1): the population integral is N = c beta^-(alpha+1) I(alpha)
and the income integral R = c beta^-(alpha+2) I(alpha+1).  For the
gamma family the same forms hold with zeta replaced by 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .special import (
    Accuracy,
    DEFAULT_ACCURACY,
    DomainError,
    bose_tail_cutoff,
    gamma,
    integrate,
    zeta,
)

# e^-x underflows below this; both families are identically zero there
# to double precision.
_EXP_UNDERFLOW = 745.0


class ModelKind(enum.Enum):
    """Which density family an operation should use."""

    BOSE_EINSTEIN = "be"
    GAMMA = "gamma"

    @classmethod
    def from_name(cls, name: str) -> "ModelKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise DomainError(f"unknown model kind {name!r}; choose 'be' or 'gamma'")


@dataclass(frozen=True)
class ModelParams:
    """The triple (c, alpha, beta).

    c is the overall scale in households per income-unit^(alpha+1),
    alpha the dimensionless exponent, beta the inverse income scale.
    """

    c: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.c > 0.0:
            raise DomainError(f"c must be positive, got {self.c!r}")
        if not self.alpha > 0.0:
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta!r}")


def _bose_weight(x: float) -> float:
    # 1/(e^x - 1) = e^-x / (1 - e^-x), stable for both tiny and large x.
    return math.exp(-x) / -math.expm1(-x)


def density(kind: ModelKind, p: ModelParams, r: float) -> float:
    """Density of households at income r (>= 0).

    At r = 0 the value is the limit: 0 for alpha > 1, c/beta for
    alpha = 1 (Bose-Einstein) and 0 for the gamma family; for
    alpha < 1 the Bose-Einstein limit diverges and +inf is returned.
    """
    if math.isnan(r) or r < 0.0:
        raise DomainError(f"income must be nonnegative, got {r!r}")
    if r == 0.0:
        if kind is ModelKind.GAMMA:
            return 0.0
        if p.alpha > 1.0:
            return 0.0
        if p.alpha == 1.0:
            return p.c / p.beta
        return math.inf
    x = p.beta * r
    if x > _EXP_UNDERFLOW:
        return 0.0
    if kind is ModelKind.BOSE_EINSTEIN:
        return p.c * r**p.alpha * _bose_weight(x)
    return p.c * r**p.alpha * math.exp(-x)


def bin_mass(
    kind: ModelKind,
    p: ModelParams,
    lo: float,
    hi: float,
    acc: Accuracy = DEFAULT_ACCURACY,
) -> float:
    """Households falling in the income bracket [lo, hi].

    Adaptive quadrature of the density.  A bracket starting at 0 is
    integrated under the substitution r = t^2, which flattens the
    r^(alpha-1) behaviour near the origin (singular for alpha < 1,
    merely kinked for fractional alpha above it).
    """
    if not 0.0 <= lo < hi:
        raise DomainError(f"bad bracket [{lo!r}, {hi!r}]")

    def f(r: float) -> float:
        return density(kind, p, r)

    if lo > 0.0:
        return integrate(f, lo, hi, acc)
    split = min(hi, 1.0)

    def f_sub(t: float) -> float:
        return 2.0 * t * density(kind, p, t * t)

    mass = integrate(f_sub, 0.0, math.sqrt(split), acc)
    if hi > split:
        mass += integrate(f, split, hi, acc)
    return mass


def _family_integral(kind: ModelKind, a: float) -> float:
    # I(a) for Bose-Einstein, Gamma(a+1) alone for the gamma family.
    if kind is ModelKind.BOSE_EINSTEIN:
        return gamma(a + 1.0) * zeta(a + 1.0)
    return gamma(a + 1.0)


def total_population(
    p: ModelParams,
    acc: Accuracy = DEFAULT_ACCURACY,
    kind: ModelKind = ModelKind.BOSE_EINSTEIN,
) -> float:
    """N = integral of the density over all incomes, in closed form.

    ``acc`` is accepted for signature symmetry with the quadrature
    operations; the closed form needs no subdivision budget.
    """
    return p.c * p.beta ** -(p.alpha + 1.0) * _family_integral(kind, p.alpha)


def total_income(
    p: ModelParams,
    acc: Accuracy = DEFAULT_ACCURACY,
    kind: ModelKind = ModelKind.BOSE_EINSTEIN,
) -> float:
    """R = integral of r times the density, in closed form."""
    return p.c * p.beta ** -(p.alpha + 2.0) * _family_integral(kind, p.alpha + 1.0)


def beta_for_population(
    n_target: float,
    c: float,
    alpha: float,
    kind: ModelKind = ModelKind.BOSE_EINSTEIN,
) -> float:
    """Invert N(beta) at fixed c and alpha.

    beta = (c I(alpha) / N)^(1/(alpha+1)), so the income scale obeys
    1/beta proportional to N^(1/(alpha+1)) — the N^(2/5) law at
    alpha = 3/2.
    """
    if not n_target > 0.0:
        raise DomainError(f"population target must be positive, got {n_target!r}")
    if not c > 0.0:
        raise DomainError(f"c must be positive, got {c!r}")
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    return (c * _family_integral(kind, alpha) / n_target) ** (1.0 / (alpha + 1.0))


def density_gradient(
    kind: ModelKind, p: ModelParams, r: float
) -> tuple[float, float, float]:
    """Partials of the density with respect to (c, alpha, beta).

    Requires r > 0: the alpha-partial is rho log r.
    """
    if math.isnan(r) or r <= 0.0:
        raise DomainError(f"gradient needs r > 0, got {r!r}")
    rho = density(kind, p, r)
    d_c = rho / p.c
    d_alpha = rho * math.log(r)
    if kind is ModelKind.BOSE_EINSTEIN:
        # -rho r e^(beta r)/(e^(beta r) - 1) = rho r / expm1(-beta r)
        d_beta = rho * r / math.expm1(-p.beta * r)
    else:
        d_beta = -rho * r
    return d_c, d_alpha, d_beta


def population_by_quadrature(
    p: ModelParams,
    acc: Accuracy = DEFAULT_ACCURACY,
    kind: ModelKind = ModelKind.BOSE_EINSTEIN,
) -> float:
    """N again, but by integrating the density numerically.

    The upper limit is the tail cutoff of the underlying Bose
    integrand mapped back through beta.  This is the cross-check
    route; production consumers should call total_population.
    """
    cutoff = bose_tail_cutoff(p.alpha, acc.abs_tol) / p.beta
    return bin_mass(kind, p, 0.0, cutoff, acc)
