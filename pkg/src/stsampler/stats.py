"""Uniformity checks: frequency tables, Pearson chi-squared, and ratio bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .cnf import Assignment

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 100_000


class SampleNotInSolutionSet(ValueError):
    """A sample that is not a solution reached the tally (a sampler soundness bug)."""


@dataclass
class FrequencyTable:
    solutions: list[Assignment]
    counts: list[int]

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass
class ChiSquaredReport:
    statistic: float
    dof: int
    p_value: float
    expected: float
    reject_at_05: bool = field(init=False)

    def __post_init__(self):
        self.reject_at_05 = self.p_value < 0.05

    def p_value_text(self) -> str:
        return ">= 0.99" if self.p_value >= 0.995 else f"{self.p_value:.2f}"


def tally(samples: Sequence, s_f: Sequence[Assignment]) -> FrequencyTable:
    """Count how often each solution of ``s_f`` occurs in ``samples``."""
    solutions = [tuple(s) for s in s_f]
    index = {s: i for i, s in enumerate(solutions)}
    if len(index) != len(solutions):
        raise ValueError("solution list contains duplicates")
    counts = [0] * len(solutions)
    for a in samples:
        i = index.get(tuple(a))
        if i is None:
            raise SampleNotInSolutionSet(f"sample {''.join(map(str, a))} is not in the solution set")
        counts[i] += 1
    return FrequencyTable(solutions, counts)


def _lower_series(a: float, x: float) -> float:
    """Regularised lower incomplete gamma P(a, x) by its power series."""
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_fraction(a: float, x: float) -> float:
    """Regularised upper incomplete gamma Q(a, x) by modified Lentz continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gamma_q(a: float, x: float) -> float:
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _lower_series(a, x))
    return min(1.0, _upper_fraction(a, x))


def chi2_tail(x: float, dof: int) -> float:
    """Upper-tail probability of the chi-squared law with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if x < 0:
        raise ValueError("x must be non-negative")
    return gamma_q(dof / 2.0, x / 2.0)


def chi_squared(t: FrequencyTable) -> ChiSquaredReport:
    """Pearson statistic against the uniform distribution over ``t.solutions``."""
    z = len(t.counts)
    total = t.total
    if total <= 0 or z < 2:
        raise ValueError("need at least one sample and at least two solutions")
    expected = total / z
    stat = sum((c - expected) ** 2 for c in t.counts) / expected
    return ChiSquaredReport(stat, z - 1, chi2_tail(stat, z - 1), expected)


@dataclass
class RatioReport:
    max_ratio: float
    bound: float
    slack: float
    violated: bool
    pair: tuple[int, int]


def ratio_bound(k: int, M: int) -> float:
    """Largest allowed probability ratio between two pseudosolutions, ``(M+k-1)/k``."""
    return (M + k - 1) / k


def ratio_diagnostic(t: FrequencyTable, k: int, M: int) -> RatioReport:
    """Compare the largest add-one smoothed count ratio with ``(M+k-1)/k``.

    The slack is three standard deviations of the ratio of the two extreme
    multinomial cells (delta method on the log ratio).
    """
    total = t.total
    if total <= 0:
        raise ValueError("empty table")
    counts = t.counts
    hi = max(range(len(counts)), key=lambda i: (counts[i], -i))
    lo = min(range(len(counts)), key=lambda i: (counts[i], i))
    n_hi, n_lo = counts[hi] + 1, counts[lo] + 1
    ratio = n_hi / n_lo
    p_hi, p_lo = counts[hi] / total, counts[lo] / total
    var_log = (1 - p_hi) / n_hi + (1 - p_lo) / n_lo + 2.0 / total
    slack = 3.0 * ratio * math.sqrt(var_log)
    bound = ratio_bound(k, M)
    return RatioReport(ratio, bound, slack, ratio > bound + slack, (hi, lo))
