from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pegeval.core import PegevalError
from pegeval.stats import (
    Alternative,
    PValueMethod,
    UndefinedTestError,
    compare_tasks,
    mann_whitney_u,
    wilcoxon_signed_rank,
)

from conftest import load_published_column


def enumerate_signed_rank(diffs):
    """Exact tail probabilities of W+ over all sign assignments."""
    diffs = np.asarray(diffs, dtype=float)
    diffs = diffs[diffs != 0]
    order = np.argsort(np.argsort(np.abs(diffs)))
    ranks = order + 1
    w_obs = ranks[diffs > 0].sum()
    n = len(diffs)
    ge = le = 0
    for signs in product((0, 1), repeat=n):
        w = sum(r for s, r in zip(signs, ranks) if s)
        ge += w >= w_obs
        le += w <= w_obs
    total = 2**n
    return Fraction(int(ge), total), Fraction(int(le), total), float(w_obs)


def enumerate_mwu(a, b):
    """Exact tail probabilities of U over all label arrangements (no ties)."""
    a, b = list(a), list(b)
    u_obs = sum(x > y for x in a for y in b)
    pooled = sorted(a + b)
    n1 = len(a)
    ge = le = total = 0
    for subset in combinations(range(len(pooled)), n1):
        sa = [pooled[i] for i in subset]
        sb = [pooled[i] for i in range(len(pooled)) if i not in subset]
        u = sum(x > y for x in sa for y in sb)
        total += 1
        ge += u >= u_obs
        le += u <= u_obs
    return Fraction(ge, total), Fraction(le, total), float(u_obs)


class TestWilcoxonSignedRank:
    def test_five_positive_differences(self):
        result = wilcoxon_signed_rank([2, 4, 6, 8, 10], [1, 2, 3, 4, 5], "greater")
        assert result.p_value == 0.03125
        assert result.p_exact == Fraction(1, 32)
        assert result.method is PValueMethod.EXACT
        assert result.statistic == 15.0

    def test_identical_vectors_undefined(self):
        with pytest.raises(UndefinedTestError):
            wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])

    def test_zero_differences_dropped(self):
        result = wilcoxon_signed_rank([2, 4, 6, 5, 7], [1, 2, 3, 5, 7], "greater")
        assert result.n_effective == 3

    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(71)
        for _ in range(40):
            n = int(rng.integers(2, 11))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            ge, le, w = enumerate_signed_rank(x - y)
            for alt, expected in (
                (Alternative.GREATER, ge),
                (Alternative.LESS, le),
                (Alternative.TWO_SIDED, min(Fraction(1), 2 * min(ge, le))),
            ):
                result = wilcoxon_signed_rank(x, y, alt)
                assert result.method is PValueMethod.EXACT
                assert result.p_exact == expected
                assert result.p_value == float(expected)
                assert result.statistic == w

    def test_two_sided_doubles_smaller_tail(self):
        rng = np.random.default_rng(72)
        x = rng.normal(size=9)
        y = rng.normal(size=9)
        greater = wilcoxon_signed_rank(x, y, "greater").p_exact
        less = wilcoxon_signed_rank(x, y, "less").p_exact
        two = wilcoxon_signed_rank(x, y, "two_sided").p_exact
        assert two == min(Fraction(1), 2 * min(greater, less))

    def test_tied_magnitudes_fall_back_to_normal(self):
        result = wilcoxon_signed_rank([2, 3, 4, 5, 6], [1, 2, 3, 4, 5])
        assert result.method is PValueMethod.NORMAL_APPROX

    def test_large_sample_uses_normal(self):
        rng = np.random.default_rng(73)
        x = rng.normal(size=40)
        result = wilcoxon_signed_rank(x, x - rng.uniform(0.1, 1.0, size=40), "greater")
        assert result.method is PValueMethod.NORMAL_APPROX
        assert result.p_value < 1e-6

    @given(
        st.lists(
            st.tuples(st.integers(-400, 400), st.integers(-400, 400)),
            min_size=2,
            max_size=12,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_monotone_transform_invariance(self, pairs):
        # dyadic values keep the affine map exact in floating point
        x = np.array([p[0] for p in pairs]) * 0.25
        y = np.array([p[1] for p in pairs]) * 0.25
        if (x == y).all():
            return
        base = wilcoxon_signed_rank(x, y)
        # strictly increasing affine map preserves difference signs and
        # magnitude order, hence all ranks
        scaled = wilcoxon_signed_rank(3.0 * x + 7.0, 3.0 * y + 7.0)
        assert scaled.p_value == pytest.approx(base.p_value, abs=1e-12)

    def test_p_value_in_unit_interval(self):
        rng = np.random.default_rng(74)
        for n in (3, 10, 30, 80):
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            for alt in Alternative:
                p = wilcoxon_signed_rank(x, y, alt).p_value
                assert 0.0 <= p <= 1.0


class TestMannWhitneyU:
    def test_fully_separated_samples(self):
        result = mann_whitney_u([1, 2, 3], [4, 5, 6], "less")
        assert result.statistic == 0.0
        assert result.p_value == 0.05
        assert result.p_exact == Fraction(1, 20)
        assert result.method is PValueMethod.EXACT

    def test_identical_multisets_not_significant(self):
        result = mann_whitney_u([1, 2, 3], [1, 2, 3])
        assert result.p_value >= 0.99

    def test_empty_sample_rejected(self):
        with pytest.raises(PegevalError):
            mann_whitney_u([], [1.0])

    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(81)
        for _ in range(30):
            n1 = int(rng.integers(2, 6))
            n2 = int(rng.integers(2, 6))
            a = rng.normal(size=n1)
            b = rng.normal(size=n2)
            ge, le, u = enumerate_mwu(a, b)
            for alt, expected in (
                (Alternative.GREATER, ge),
                (Alternative.LESS, le),
                (Alternative.TWO_SIDED, min(Fraction(1), 2 * min(ge, le))),
            ):
                result = mann_whitney_u(a, b, alt)
                assert result.method is PValueMethod.EXACT
                assert result.p_exact == expected
                assert abs(result.p_value - float(expected)) <= 1e-12
                assert result.statistic == u

    def test_shift_invariance(self):
        rng = np.random.default_rng(82)
        a = rng.normal(size=7)
        b = rng.normal(size=9)
        assert mann_whitney_u(a, b).p_value == mann_whitney_u(a + 11.5, b + 11.5).p_value

    def test_ties_fall_back_to_normal(self):
        result = mann_whitney_u([1, 1, 2], [2, 3, 4])
        assert result.method is PValueMethod.NORMAL_APPROX

    def test_large_sample_normal(self):
        rng = np.random.default_rng(83)
        a = rng.normal(size=30)
        b = rng.normal(loc=2.0, size=30)
        result = mann_whitney_u(a, b, "less")
        assert result.method is PValueMethod.NORMAL_APPROX
        assert result.p_value < 1e-6

    def test_constant_pooled_sample(self):
        result = mann_whitney_u([5.0, 5.0], [5.0, 5.0])
        assert result.p_value == 1.0


class TestCompareTasks:
    def test_identical_scores_reported_as_no_difference(self):
        scores = np.array([0.5, 0.6, 0.7])
        comparison = compare_tasks(scores, scores)
        assert comparison.identical is True
        assert comparison.significant is False
        assert comparison.test is None

    def test_unimodal_vs_multimodal_significant(self):
        task1 = load_published_column("hutom_task1")
        task4 = load_published_column("hutom_task4")
        comparison = compare_tasks(task1, task4)
        assert comparison.significant is True

    def test_adjacent_multimodal_not_significant(self):
        task4 = load_published_column("hutom_task4")
        task5 = load_published_column("hutom_task5")
        comparison = compare_tasks(task4, task5)
        assert comparison.significant is False

    def test_full_published_significance_grid(self):
        # significance pattern of multimodal-vs-unimodal comparisons for the
        # team with results on every task: (task_a, task_b) -> significant
        expected = {
            (1, 4): True,
            (2, 4): True,
            (1, 5): True,
            (2, 5): True,
            (3, 5): True,
            (4, 5): False,
        }
        for (a, b), significant in expected.items():
            col_a = load_published_column(f"hutom_task{a}")
            col_b = load_published_column(f"hutom_task{b}")
            assert compare_tasks(col_a, col_b).significant is significant, (a, b)
