"""Nonparametric paired and unpaired significance tests.

Both tests compute exact p-values on small tie-free samples by counting the
full null distribution, and otherwise fall back to the normal approximation
with tie and continuity corrections. Exact-mode p-values are rationals
(count / 2**n for the signed-rank test, count / C(n1+n2, n1) for the U test)
and are also exposed as ``fractions.Fraction`` for bit-exact comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from . import _accel
from .core import PegevalError

DEFAULT_ALPHA = 0.05
EXACT_LIMIT_SIGNED_RANK = 25
EXACT_LIMIT_MWU = 20


class Alternative(str, Enum):
    TWO_SIDED = "two_sided"
    GREATER = "greater"
    LESS = "less"


class PValueMethod(str, Enum):
    EXACT = "exact"
    NORMAL_APPROX = "normal_approx"


class UndefinedTestError(PegevalError):
    """The test statistic carries no information (e.g. all differences zero)."""


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: PValueMethod
    n_effective: int
    alternative: Alternative
    p_exact: Fraction | None = None

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method.value,
            "n_effective": self.n_effective,
            "alternative": self.alternative.value,
        }


def _rankdata(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based); ties share the mean of their ordinal ranks."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _norm_sf(z: float) -> float:
    return math.erfc(z / math.sqrt(2.0)) / 2.0


def _two_sided_from_tails(p_greater: Fraction, p_less: Fraction) -> Fraction:
    return min(Fraction(1), 2 * min(p_greater, p_less))


def _coerce_alternative(alternative: str | Alternative) -> Alternative:
    if isinstance(alternative, Alternative):
        return alternative
    return Alternative(alternative.replace("-", "_"))


def wilcoxon_signed_rank(
    x,
    y,
    alternative: str | Alternative = Alternative.TWO_SIDED,
    exact_limit: int = EXACT_LIMIT_SIGNED_RANK,
) -> TestResult:
    """Paired Wilcoxon signed-rank test.

    Zero differences are dropped; ties among absolute differences share
    average ranks. The statistic is W+, the sum of ranks of positive
    differences. ``alternative="greater"`` tests whether x tends to exceed y.

    Exact enumeration is used when the effective sample is at most
    ``exact_limit`` and all absolute differences are distinct; otherwise the
    normal approximation with tie and continuity corrections applies.

    Raises UndefinedTestError when every difference is zero.
    """
    alternative = _coerce_alternative(alternative)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise PegevalError("paired samples must be equal-length non-empty vectors")
    diff = x - y
    diff = diff[diff != 0.0]
    n = int(diff.size)
    if n == 0:
        raise UndefinedTestError("all paired differences are zero")
    abs_ranks = _rankdata(np.abs(diff))
    w_plus = float(abs_ranks[diff > 0].sum())
    has_ties = len(np.unique(np.abs(diff))) != n

    if n <= exact_limit and not has_ties:
        counts = _accel.signed_rank_counts(n)
        total = 1 << n
        w = int(round(w_plus))
        p_greater = Fraction(int(counts[w:].sum()), total)
        p_less = Fraction(int(counts[: w + 1].sum()), total)
        if alternative is Alternative.GREATER:
            p = p_greater
        elif alternative is Alternative.LESS:
            p = p_less
        else:
            p = _two_sided_from_tails(p_greater, p_less)
        return TestResult(w_plus, float(p), PValueMethod.EXACT, n, alternative, p_exact=p)

    mean = n * (n + 1) / 4.0
    tie_counts = np.unique(abs_ranks, return_counts=True)[1]
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(((tie_counts**3 - tie_counts).sum())) / 48.0
    if var <= 0:
        # every difference identical in magnitude and too few of them to vary
        return TestResult(w_plus, 1.0, PValueMethod.NORMAL_APPROX, n, alternative)
    sd = math.sqrt(var)
    if alternative is Alternative.GREATER:
        p = _norm_sf((w_plus - mean - 0.5) / sd)
    elif alternative is Alternative.LESS:
        p = 1.0 - _norm_sf((w_plus - mean + 0.5) / sd)
    else:
        z = (abs(w_plus - mean) - 0.5) / sd
        p = min(1.0, 2.0 * _norm_sf(max(z, 0.0)))
    return TestResult(w_plus, float(p), PValueMethod.NORMAL_APPROX, n, alternative)


def mann_whitney_u(
    a,
    b,
    alternative: str | Alternative = Alternative.TWO_SIDED,
    exact_limit: int = EXACT_LIMIT_MWU,
) -> TestResult:
    """Mann-Whitney U test for two independent samples.

    The statistic is U for the first sample: the number of (a_i, b_j) pairs
    with a_i > b_j, counting ties as one half. ``alternative="greater"``
    tests whether values in ``a`` tend to exceed those in ``b``.

    The exact distribution is used when the pooled sample has at most
    ``exact_limit`` observations and no ties; otherwise the normal
    approximation with tie and continuity corrections applies.
    """
    alternative = _coerce_alternative(alternative)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise PegevalError("both samples must be non-empty")
    n1, n2 = int(a.size), int(b.size)
    pooled = np.concatenate([a, b])
    ranks = _rankdata(pooled)
    r1 = float(ranks[:n1].sum())
    u = r1 - n1 * (n1 + 1) / 2.0
    has_ties = len(np.unique(pooled)) != n1 + n2

    if n1 + n2 <= exact_limit and not has_ties:
        counts = _accel.mwu_counts(n1, n2)
        total = math.comb(n1 + n2, n1)
        u_int = int(round(u))
        p_greater = Fraction(int(counts[u_int:].sum()), total)
        p_less = Fraction(int(counts[: u_int + 1].sum()), total)
        if alternative is Alternative.GREATER:
            p = p_greater
        elif alternative is Alternative.LESS:
            p = p_less
        else:
            p = _two_sided_from_tails(p_greater, p_less)
        return TestResult(u, float(p), PValueMethod.EXACT, n1 + n2, alternative, p_exact=p)

    n = n1 + n2
    mean = n1 * n2 / 2.0
    tie_counts = np.unique(pooled, return_counts=True)[1]
    tie_term = float((tie_counts**3 - tie_counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return TestResult(u, 1.0, PValueMethod.NORMAL_APPROX, n, alternative)
    sd = math.sqrt(var)
    if alternative is Alternative.GREATER:
        p = _norm_sf((u - mean - 0.5) / sd)
    elif alternative is Alternative.LESS:
        p = 1.0 - _norm_sf((u - mean + 0.5) / sd)
    else:
        z = (abs(u - mean) - 0.5) / sd
        p = min(1.0, 2.0 * _norm_sf(max(z, 0.0)))
    return TestResult(u, float(p), PValueMethod.NORMAL_APPROX, n, alternative)


@dataclass(frozen=True)
class TaskComparison:
    """Outcome of comparing one team's scores between two task configurations."""

    test: TestResult | None
    significant: bool
    alpha: float
    identical: bool = False

    def as_dict(self) -> dict:
        out = {
            "significant": self.significant,
            "alpha": self.alpha,
            "identical": self.identical,
        }
        if self.test is not None:
            out.update(self.test.as_dict())
        return out


def compare_tasks(
    scores_a,
    scores_b,
    alpha: float = DEFAULT_ALPHA,
    alternative: str | Alternative = Alternative.TWO_SIDED,
) -> TaskComparison:
    """Paired Wilcoxon comparison of per-sequence scores between two tasks.

    Identical score vectors make the test undefined; that outcome is reported
    as a non-significant "no difference" rather than an error.
    """
    try:
        result = wilcoxon_signed_rank(scores_a, scores_b, alternative)
    except UndefinedTestError:
        return TaskComparison(test=None, significant=False, alpha=alpha, identical=True)
    return TaskComparison(test=result, significant=result.p_value < alpha, alpha=alpha)
