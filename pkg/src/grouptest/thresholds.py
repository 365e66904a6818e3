"""Closed-form thresholds, rate constants, and the DD parameter schedule.

Test counts are real-valued throughout; callers round when they need an
integer budget.  Probability products are evaluated in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .designs import tests_per_item
from .errors import CapacityError, InvalidParameterError

LN2 = math.log(2.0)

#: Small-prevalence limit of the converse constant, (ln 2)^2.
LN2_SQUARED = LN2 * LN2

#: Largest coupon-type count accepted by the inclusion-exclusion sum.
COUPON_CAP = 60


def t_star(n: float, k: float) -> float:
    """Sharp test threshold max{k log2(n/k), k log2(k) / ln 2}.

    The first branch dominates for sparse defective sets, the second in
    the dense regime where the decoder must separate defectives from each
    other rather than from the bulk.
    """
    if not 1 <= k <= n:
        raise InvalidParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    return max(k * math.log2(n / k), k * math.log2(k) / LN2)


def optimal_tests(n: float, k: float) -> float:
    """min{t_star(n, k), n}: individual testing caps the useful budget."""
    if not 1 <= k <= n / 2:
        raise InvalidParameterError(f"need 1 <= k <= n/2, got k={k}, n={n}")
    return min(t_star(n, k), float(n))


class DisguiseExponent(NamedTuple):
    """Minimum of x ln(1 - q^(x-1)) over integer pool sizes x, with argmin."""

    value: float
    size: int


def disguise_exponent(p: float, n: int, chunk: int = 1 << 20) -> DisguiseExponent:
    """Per-test disguise exponent: min over x in [2, n] of x ln(1 - q^(x-1)).

    This is the most negative per-test contribution to the average
    log-probability of an item being totally disguised (Aldridge's bound).
    The scan covers the full integer range; unimodality is not assumed.
    """
    if not 0.0 < p <= 0.5:
        raise InvalidParameterError(f"prevalence must lie in (0, 1/2], got {p}")
    if n < 2:
        raise InvalidParameterError(f"need n >= 2, got {n}")
    log_q = math.log1p(-p)
    best_value = math.inf
    best_x = 2
    for lo in range(2, n + 1, chunk):
        x = np.arange(lo, min(lo + chunk, n + 1), dtype=np.float64)
        # q^(x-1) underflows to 0 for large x; log1p(-0) = 0 is harmless
        # because the minimum is attained at moderate x where values are < 0.
        values = x * np.log1p(-np.exp((x - 1.0) * log_q))
        j = int(np.argmin(values))
        if values[j] < best_value:
            best_value = float(values[j])
            best_x = int(x[j])
    return DisguiseExponent(best_value, best_x)


def converse_constant(p: float, n: int) -> float:
    """Exact rate constant -exponent * p; tends to (ln 2)^2 as p -> 0."""
    return -disguise_exponent(p, n).value * p


def disguise_objective(d: float) -> float:
    """Scaled small-prevalence objective -d ln(1 - e^(-d)), d > 0."""
    if d <= 0.0:
        raise InvalidParameterError(f"objective argument must be positive, got {d}")
    return -d * math.log1p(-math.exp(-d))


def disguise_objective_peak(lo: float = 1e-6, hi: float = 20.0,
                            tol: float = 1e-9) -> tuple[float, float]:
    """Maximizer and maximum of the scaled objective via golden-section search.

    The objective is smooth and single-peaked on [lo, hi]; the search
    shrinks the bracket below ``tol``.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = disguise_objective(c), disguise_objective(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = disguise_objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = disguise_objective(d)
    x = (a + b) / 2.0
    return x, disguise_objective(x)


def converse_budget(n: float, p: float, xi: float, c_p: float) -> float:
    """Test budget n p (1 - 4 xi) ln(n) / ((1 + xi) c_p) below which recovery fails.

    c_p is the caller-supplied rate constant, normally
    :func:`converse_constant` (exact) or :data:`LN2_SQUARED` (small-p limit).
    """
    if not 0.0 < xi <= 0.25:
        raise InvalidParameterError(f"xi must lie in (0, 1/4], got {xi}")
    if c_p <= 0.0:
        raise InvalidParameterError(f"rate constant must be positive, got {c_p}")
    return n * p * (1.0 - 4.0 * xi) * math.log(n) / ((1.0 + xi) * c_p)


@dataclass(frozen=True)
class RateParams:
    """DD analysis parameter schedule for a given (n, k, T, epsilon).

    w_minus/w_plus bracket the count of tests covered by the other
    defectives, g_star thresholds the count of PD non-defectives, and z
    scales the largest plausible negative-test size.  psi3_valid records
    whether delta <= 1/4, the regime in which the third error term's
    concentration bound applies.
    """

    epsilon: float
    delta: float
    xi: float
    L: int
    w_minus: float
    w_plus: float
    g_star: float
    z: float
    psi3_valid: bool


def dd_params(n: float, k: float, T: int, epsilon: float,
              xi: float = 0.1) -> RateParams:
    """Parameter schedule: L = max(1, floor(T ln2 / k)), delta = (2/3) epsilon,
    w-+ = (T/2)(1 -+ delta), g* = n (1/2 + delta)^L, z = 2 / ln(1 / (1 - k/n))."""
    if epsilon < 0.0:
        raise InvalidParameterError(f"epsilon must be >= 0, got {epsilon}")
    if not 1 <= k < n:
        raise InvalidParameterError(f"need 1 <= k < n, got k={k}, n={n}")
    L = tests_per_item(T, k)
    delta = 2.0 * epsilon / 3.0
    w_minus = 0.5 * T * (1.0 - delta)
    w_plus = 0.5 * T * (1.0 + delta)
    g_star = n * (0.5 + delta) ** L
    z = 2.0 / -math.log1p(-k / n)
    return RateParams(epsilon=epsilon, delta=delta, xi=xi, L=L,
                      w_minus=w_minus, w_plus=w_plus, g_star=g_star, z=z,
                      psi3_valid=delta <= 0.25)


def coupon_coverage_prob(types: int, prob: float, draws: int) -> float:
    """Probability that each of ``types`` coupon kinds, drawn mutually
    exclusively with probability ``prob`` per trial, appears within
    ``draws`` trials.

    Evaluated by inclusion-exclusion with exact binomial coefficients and
    compensated summation: sum over l of (-1)^l C(types, l) (1 - l prob)^draws.
    """
    if types < 0 or draws < 0:
        raise InvalidParameterError(
            f"counts must be non-negative, got types={types}, draws={draws}")
    if prob < 0.0 or types * prob > 1.0 + 1e-12:
        raise InvalidParameterError(
            f"need 0 <= types * prob <= 1, got types={types}, prob={prob}")
    if types > COUPON_CAP:
        raise CapacityError(
            f"inclusion-exclusion is limited to {COUPON_CAP} coupon types, got {types}")
    terms = []
    for ell in range(types + 1):
        base = max(1.0 - ell * prob, 0.0)  # guard float dust at l*prob ~ 1
        terms.append((-1.0) ** ell * math.comb(types, ell) * base ** draws)
    return math.fsum(terms)


def negative_test_scale(p: float) -> float:
    """Size scale z = 2 / ln(1/q); a test of z ln n items is negative w.p. n^-2."""
    if not 0.0 < p <= 0.5:
        raise InvalidParameterError(f"prevalence must lie in (0, 1/2], got {p}")
    return 2.0 / -math.log1p(-p)


def max_negative_test_size(p: float, n: float) -> float:
    """Threshold z ln n above which a negative test is implausible."""
    return negative_test_scale(p) * math.log(n)
