"""Location of the 1-CARD-XOR satisfiability phase transition.

The transition density is phi(k/n) = log2(#F) / n, where #F = sum of C(n, w) for w in 0..k is the number of
solutions of the at-most-k constraint. Random instances with density s below phi are satisfiable with high
probability and instances above it are unsatisfiable with high probability.

phi has no closed form, so closed-form bounds built from the binary entropy H are provided as well:
    - 0 < k < n/2:   H(k/n) - log2(8k(1 - k/n))/n  <=  phi  <=  H(k/n)
    - n/2 <= k <= n: 1 - 1/n                       <=  phi  <=  1

All logarithms are base 2. Binomial sums are exact integers up to n = 4096, and only the final value is converted
to floating point, so phi is accurate to machine precision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from cardxor.errors import DomainError

MAX_EXACT_N = 4096


class Branch(str, enum.Enum):
    """Which closed-form bound formula applies."""

    BELOW_HALF = "below-half"
    AT_OR_ABOVE_HALF = "at-or-above-half"


class Region(str, enum.Enum):
    """Predicted satisfiability region of a density."""

    SAT_WHP = "SAT-whp"
    UNSAT_WHP = "UNSAT-whp"
    CRITICAL = "critical"


@dataclass(frozen=True)
class TransitionReport:
    """Transition function and its closed-form bounds at one (n, k).

    Attributes:
        n: Variable count.
        k: Cardinality bound.
        phi: Exact transition density, in bits per variable.
        lower_s: Closed-form lower bound on phi. 0 when k = 0.
        upper_s: Closed-form upper bound on phi.
        applicable_branch: Which bound formula applies.
        lower_defined: False when the lower bound formula is undefined (k = 0) and lower_s is a placeholder.
    """

    n: int
    k: int
    phi: float
    lower_s: float
    upper_s: float
    applicable_branch: Branch
    lower_defined: bool = True


@dataclass(frozen=True)
class RegionPrediction:
    """Predicted region of a density relative to phi.

    Attributes:
        region: SAT-whp, UNSAT-whp, or critical.
        margin: Distance |s - phi|.
    """

    region: Region
    margin: float


def _check_domain(n: int, k: int) -> None:
    """Validate 0 <= k <= n and 1 <= n <= MAX_EXACT_N."""
    if not 1 <= n <= MAX_EXACT_N:
        raise DomainError(f"n={n} outside [1, {MAX_EXACT_N}]")
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside [0, {n}]")


def entropy(mu: float) -> float:
    """Binary entropy H(mu) = -mu·log2(mu) - (1 - mu)·log2(1 - mu), with H(0) = H(1) = 0."""
    if not 0.0 <= mu <= 1.0:
        raise DomainError(f"entropy argument {mu} outside [0, 1]")
    if mu in (0.0, 1.0):
        return 0.0
    return -mu * math.log2(mu) - (1.0 - mu) * math.log2(1.0 - mu)


def binom_sum(n: int, k: int) -> int:
    """Exact volume of the Hamming ball of radius k in n dimensions."""
    _check_domain(n, k)
    return sum(math.comb(n, weight) for weight in range(k + 1))


def binom_sum_log2(n: int, k: int) -> float:
    """log2 of the sum of C(n, w) for w in 0..k, from the exact integer sum."""
    return math.log2(binom_sum(n, k))


def phi(n: int, k: int) -> float:
    """Transition density phi(k/n) = log2(#F) / n."""
    return binom_sum_log2(n, k) / n


def lower_bound(n: int, k: int) -> float:
    """Closed-form density below which instances are satisfiable with high probability.

    Raises:
        DomainError for k = 0, where the bound formula is undefined (phi = 0 covers that case).
    """
    _check_domain(n, k)
    if k == 0:
        raise DomainError("lower bound is undefined for k=0")
    if 2 * k < n:
        return entropy(k / n) - math.log2(8 * k * (1 - k / n)) / n
    return 1 - 1 / n


def upper_bound(n: int, k: int) -> float:
    """Closed-form density above which instances are unsatisfiable with high probability."""
    _check_domain(n, k)
    if 2 * k < n:
        return entropy(k / n)
    return 1.0


def report(n: int, k: int) -> TransitionReport:
    """Bundle phi and both bounds for a single (n, k)."""
    branch = Branch.BELOW_HALF if 2 * k < n else Branch.AT_OR_ABOVE_HALF
    value = phi(n, k)
    if k == 0:
        return TransitionReport(n, k, value, 0.0, upper_bound(n, k), branch, lower_defined=False)
    return TransitionReport(n, k, value, lower_bound(n, k), upper_bound(n, k), branch)


def classify(n: int, k: int, s: float | Fraction, margin: float) -> RegionPrediction:
    """Place a density relative to phi with a safety margin.

    Args:
        n: Variable count.
        k: Cardinality bound.
        s: XOR density.
        margin: Minimum distance from phi for a high probability prediction.

    Returns:
        SAT-whp if s <= phi - margin, UNSAT-whp if s >= phi + margin, otherwise critical.
        A density exactly on phi is always critical.
    """
    if s < 0:
        raise DomainError(f"density s={s} must be non-negative")
    if margin < 0:
        raise DomainError(f"margin {margin} must be non-negative")
    value = phi(n, k)
    density = float(s)
    distance = abs(density - value)
    if density <= value - margin and density < value:
        return RegionPrediction(Region.SAT_WHP, distance)
    if density >= value + margin and density > value:
        return RegionPrediction(Region.UNSAT_WHP, distance)
    return RegionPrediction(Region.CRITICAL, distance)


def alpha_margin(n: int, k: int, m: int) -> float:
    """Slack log2(#F) - m between the solution count and the XOR row count.

    Positive values are the alpha available to the satisfiable side of the statistical test, negative values the
    alpha available to the unsatisfiable side.
    """
    return binom_sum_log2(n, k) - m


def transition_curve(n: int, k_values: Iterable[int]) -> list[tuple[float, float]]:
    """Points (k/n, phi) of the transition curve, in the order of k_values."""
    return [(k / n, phi(n, k)) for k in k_values]
