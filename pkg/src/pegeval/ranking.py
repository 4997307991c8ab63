"""Team score aggregation and multi-method ranking with stability analysis.

A team's score for one task is the mean over test sequences of its combined
AD balanced accuracy, where "combined" averages the four granularities with
equal weight. Teams that produced no prediction for a granularity receive the
uniform-random expectation for it (1/3 for phases, 1/13 for steps, 1/7 for a
verb track).

Five ranking methods are computed: meanThenRank, medianThenRank,
rankThenMean, rankThenMedian, and testBased (pairwise one-sided signed-rank
tests; a team scores a point per opponent it significantly beats). All
methods use competition ("min") ranking for ties. A team's rank is declared
stable when a majority of methods agree; otherwise the team is tied with
every team whose rank range overlaps its own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GRANULARITIES, Granularity, PegevalError, vocabulary_for
from .stats import (
    DEFAULT_ALPHA,
    Alternative,
    UndefinedTestError,
    wilcoxon_signed_rank,
)

RANKING_METHODS = (
    "meanThenRank",
    "medianThenRank",
    "rankThenMean",
    "rankThenMedian",
    "testBased",
)


def missing_granularity_score(granularity: Granularity) -> float:
    """Uniform-random expectation used when a granularity was not predicted."""
    return 1.0 / len(vocabulary_for(granularity))


@dataclass(frozen=True)
class TeamTaskResults:
    """Per-sequence AD balanced accuracies of one team on one task.

    ``per_granularity`` maps granularity to a per-sequence score vector, or
    to None when the team produced no predictions at that granularity.
    Scores are fractions in [0, 1].
    """

    team: str
    sequence_ids: tuple[str, ...]
    per_granularity: dict[Granularity, np.ndarray | None]

    def __post_init__(self):
        n = len(self.sequence_ids)
        if n < 1:
            raise PegevalError("at least one sequence is required")
        cleaned: dict[Granularity, np.ndarray | None] = {}
        for g in GRANULARITIES:
            v = self.per_granularity.get(g)
            if v is None:
                cleaned[g] = None
                continue
            arr = np.asarray(v, dtype=np.float64)
            if arr.shape != (n,):
                raise PegevalError(
                    f"{self.team}/{g.value}: expected {n} scores, got {arr.shape}"
                )
            if (arr < 0).any() or (arr > 1).any():
                raise PegevalError(f"{self.team}/{g.value}: scores must lie in [0, 1]")
            cleaned[g] = arr
        object.__setattr__(self, "per_granularity", cleaned)

    @classmethod
    def from_combined(cls, team, sequence_ids, combined) -> "TeamTaskResults":
        """Build results that carry only per-sequence combined scores."""
        obj = cls(team, tuple(sequence_ids), {g: None for g in GRANULARITIES})
        arr = np.asarray(combined, dtype=np.float64)
        if arr.shape != (len(obj.sequence_ids),):
            raise PegevalError("combined scores must have one value per sequence")
        object.__setattr__(obj, "_combined", arr)
        return obj

    @property
    def n_sequences(self) -> int:
        return len(self.sequence_ids)

    def granularity_score(self, granularity: Granularity) -> float:
        """Mean per-sequence score for one granularity (Eq. aggregation)."""
        values = self.per_granularity[granularity]
        if values is None:
            return missing_granularity_score(granularity)
        return float(values.mean())

    def granularity_median(self, granularity: Granularity) -> float:
        values = self.per_granularity[granularity]
        if values is None:
            return missing_granularity_score(granularity)
        return float(np.median(values))

    def combined_scores(self) -> np.ndarray:
        """Per-sequence combined score: equal-weight mean of the granularities."""
        combined = getattr(self, "_combined", None)
        if combined is not None:
            return combined
        cols = []
        for g in GRANULARITIES:
            v = self.per_granularity[g]
            if v is None:
                cols.append(np.full(self.n_sequences, missing_granularity_score(g)))
            else:
                cols.append(v)
        return np.mean(np.vstack(cols), axis=0)

    def has_granularity_data(self) -> bool:
        return any(self.per_granularity[g] is not None for g in GRANULARITIES)


def team_score(results: TeamTaskResults) -> float:
    """Equal-weight mean of the four granularity scores.

    For combined-only results this equals the mean of the per-sequence
    combined scores (the two aggregations commute).
    """
    if not results.has_granularity_data():
        return float(results.combined_scores().mean())
    return float(
        np.mean([results.granularity_score(g) for g in GRANULARITIES])
    )


def _team_median_score(results: TeamTaskResults) -> float:
    if results.has_granularity_data():
        return float(np.mean([results.granularity_median(g) for g in GRANULARITIES]))
    return float(np.median(results.combined_scores()))


def competition_ranks(values: dict[str, float], higher_is_better: bool = True) -> dict[str, int]:
    """Competition ("min") ranks: rank = 1 + number of strictly better teams."""
    ranks = {}
    for team, value in values.items():
        if higher_is_better:
            better = sum(1 for v in values.values() if v > value)
        else:
            better = sum(1 for v in values.values() if v < value)
        ranks[team] = 1 + better
    return ranks


def _per_sequence_rank_matrix(matrix: np.ndarray) -> np.ndarray:
    """Competition ranks per column (sequence) of a teams x sequences matrix."""
    n_teams, n_seq = matrix.shape
    ranks = np.empty_like(matrix)
    for j in range(n_seq):
        col = matrix[:, j]
        ranks[:, j] = 1 + (col[None, :] > col[:, None]).sum(axis=1)
    return ranks


@dataclass(frozen=True)
class MethodRanking:
    method: str
    aggregate: dict[str, float]  # the per-team quantity the method ranks by
    ranks: dict[str, int]


@dataclass(frozen=True)
class RankingTable:
    teams: tuple[str, ...]
    methods: dict[str, MethodRanking]

    def ranks_for(self, team: str) -> dict[str, int]:
        return {m: r.ranks[team] for m, r in self.methods.items()}


def _check_alignment(all_results: list[TeamTaskResults]):
    if len(all_results) < 1:
        raise PegevalError("no team results given")
    ids = all_results[0].sequence_ids
    for r in all_results[1:]:
        if r.sequence_ids != ids:
            raise PegevalError(
                f"sequence sets differ between {all_results[0].team} and {r.team}"
            )
    names = [r.team for r in all_results]
    if len(set(names)) != len(names):
        raise PegevalError("duplicate team names")


def rank(
    method: str,
    all_results: list[TeamTaskResults],
    alpha: float = DEFAULT_ALPHA,
    holm: bool = False,
) -> MethodRanking:
    """Ranks for all teams under one ranking method."""
    _check_alignment(all_results)
    if method not in RANKING_METHODS:
        raise PegevalError(f"unknown ranking method {method!r}")
    teams = [r.team for r in all_results]

    if method == "meanThenRank":
        agg = {r.team: team_score(r) for r in all_results}
        return MethodRanking(method, agg, competition_ranks(agg, higher_is_better=True))
    if method == "medianThenRank":
        agg = {r.team: _team_median_score(r) for r in all_results}
        return MethodRanking(method, agg, competition_ranks(agg, higher_is_better=True))

    matrix = np.vstack([r.combined_scores() for r in all_results])
    if method in ("rankThenMean", "rankThenMedian"):
        seq_ranks = _per_sequence_rank_matrix(matrix)
        if method == "rankThenMean":
            agg = {t: float(seq_ranks[i].mean()) for i, t in enumerate(teams)}
        else:
            agg = {t: float(np.median(seq_ranks[i])) for i, t in enumerate(teams)}
        return MethodRanking(method, agg, competition_ranks(agg, higher_is_better=False))

    # testBased: points = number of opponents beaten significantly
    p_values: list[tuple[str, str, float]] = []
    for i, ri in enumerate(all_results):
        for j, rj in enumerate(all_results):
            if i == j:
                continue
            try:
                res = wilcoxon_signed_rank(matrix[i], matrix[j], Alternative.GREATER)
                p_values.append((ri.team, rj.team, res.p_value))
            except UndefinedTestError:
                p_values.append((ri.team, rj.team, 1.0))
    significant = _significant_pairs(p_values, alpha, holm)
    points = {t: 0.0 for t in teams}
    for winner, _loser in significant:
        points[winner] += 1.0
    return MethodRanking(method, points, competition_ranks(points, higher_is_better=True))


def _significant_pairs(
    p_values: list[tuple[str, str, float]], alpha: float, holm: bool
) -> list[tuple[str, str]]:
    if not holm:
        return [(a, b) for a, b, p in p_values if p < alpha]
    ordered = sorted(p_values, key=lambda t: t[2])
    m = len(ordered)
    out = []
    for k, (a, b, p) in enumerate(ordered):
        if p < alpha / (m - k):
            out.append((a, b))
        else:
            break
    return out


def rank_all_methods(
    all_results: list[TeamTaskResults],
    methods: tuple[str, ...] = RANKING_METHODS,
    alpha: float = DEFAULT_ALPHA,
    holm: bool = False,
) -> RankingTable:
    table = {m: rank(m, all_results, alpha=alpha, holm=holm) for m in methods}
    return RankingTable(tuple(r.team for r in all_results), table)


@dataclass(frozen=True)
class StabilityVerdict:
    team: str
    stable: bool
    rank: int | None  # majority rank when stable
    rank_range: tuple[int, int]
    tied_with: tuple[str, ...] = ()


def stability(table: RankingTable) -> dict[str, StabilityVerdict]:
    """Majority-rank stability across methods; overlapping ranges tie teams."""
    ranges = {}
    majority = {}
    n_methods = len(table.methods)
    for team in table.teams:
        ranks = sorted(table.ranks_for(team).values())
        ranges[team] = (ranks[0], ranks[-1])
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        best_rank, best_count = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
        majority[team] = best_rank if best_count * 2 > n_methods else None
    verdicts = {}
    for team in table.teams:
        if majority[team] is not None:
            verdicts[team] = StabilityVerdict(
                team, stable=True, rank=majority[team], rank_range=ranges[team]
            )
            continue
        lo, hi = ranges[team]
        tied = tuple(
            other
            for other in table.teams
            if other != team and ranges[other][0] <= hi and lo <= ranges[other][1]
        )
        verdicts[team] = StabilityVerdict(
            team, stable=False, rank=None, rank_range=ranges[team], tied_with=tied
        )
    return verdicts


@dataclass(frozen=True)
class BootstrapReport:
    method: str
    n_replicates: int
    seed: int
    rank_histograms: dict[str, dict[int, int]]  # team -> {rank: count}
    mean_kendall_tau: float
    full_ranks: dict[str, int]


def kendall_tau(ranks_a: dict[str, int], ranks_b: dict[str, int]) -> float:
    """Kendall's tau-b between two rankings over the same teams."""
    teams = sorted(ranks_a)
    a = np.array([ranks_a[t] for t in teams], dtype=np.float64)
    b = np.array([ranks_b[t] for t in teams], dtype=np.float64)
    concordant = discordant = 0
    ties_a = ties_b = 0
    n = len(teams)
    for i in range(n):
        for j in range(i + 1, n):
            da, db = a[i] - a[j], b[i] - b[j]
            if da == 0 and db == 0:
                continue
            if da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif da * db > 0:
                concordant += 1
            else:
                discordant += 1
    denom = np.sqrt(
        (concordant + discordant + ties_a) * (concordant + discordant + ties_b)
    )
    if denom == 0:
        return 1.0
    return float((concordant - discordant) / denom)


def bootstrap_stability(
    all_results: list[TeamTaskResults],
    n_replicates: int = 1000,
    seed: int = 0,
    method: str = "meanThenRank",
    alpha: float = DEFAULT_ALPHA,
) -> BootstrapReport:
    """Rank variability under resampling sequences with replacement.

    Replicate index sets are drawn up-front from the seed, so the report is
    deterministic regardless of evaluation order.
    """
    _check_alignment(all_results)
    if n_replicates < 1:
        raise PegevalError("n_replicates must be >= 1")
    full = rank(method, all_results, alpha=alpha)
    teams = [r.team for r in all_results]
    matrix = np.vstack([r.combined_scores() for r in all_results])
    n_seq = matrix.shape[1]
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, n_seq, size=(n_replicates, n_seq))
    histograms: dict[str, dict[int, int]] = {t: {} for t in teams}
    taus = np.empty(n_replicates)
    for b in range(n_replicates):
        sub = matrix[:, draws[b]]
        sub_results = [
            TeamTaskResults.from_combined(t, [str(k) for k in range(n_seq)], sub[i])
            for i, t in enumerate(teams)
        ]
        rep = rank(method, sub_results, alpha=alpha)
        for t in teams:
            histograms[t][rep.ranks[t]] = histograms[t].get(rep.ranks[t], 0) + 1
        taus[b] = kendall_tau(rep.ranks, full.ranks)
    return BootstrapReport(
        method=method,
        n_replicates=n_replicates,
        seed=seed,
        rank_histograms=histograms,
        mean_kendall_tau=float(taus.mean()),
        full_ranks=dict(full.ranks),
    )
