"""Report shaping: CSV and JSON serialization of evaluation and ranking runs.

CSV scores are percentages with two decimals (matching the conventional
presentation of challenge results); JSON carries full float precision. Every
report embeds the configuration that produced it, and nothing time- or
host-dependent is written, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .core import GRANULARITIES, MetricConfig, PegevalError
from .metrics import SCORE_NAMES, GranularityScores, SequenceScores
from .ranking import (
    BootstrapReport,
    RankingTable,
    StabilityVerdict,
    TeamTaskResults,
)

EVAL_CSV_COLUMNS = (
    "sequence",
    "granularity",
    "fbf_accuracy",
    "fbf_precision",
    "fbf_recall",
    "fbf_f1",
    "ad_accuracy",
    "ad_precision",
    "ad_recall",
    "ad_f1",
)

COMBINED = "combined"
_ROW_GRANULARITIES = tuple(g.value for g in GRANULARITIES) + (COMBINED,)


def _config_comment(config: dict) -> str:
    parts = [f"{k}={v}" for k, v in config.items()]
    return "# config: " + " ".join(parts)


def _score_row(scores: GranularityScores) -> list[float]:
    fbf = scores.frame_by_frame.as_dict()
    ad = scores.application_dependent.as_dict()
    return [fbf[name] for name in SCORE_NAMES] + [ad[name] for name in SCORE_NAMES]


def _rows_for_sequence(result: SequenceScores) -> dict[str, list[float]]:
    rows = {g.value: _score_row(result.per_granularity[g]) for g in GRANULARITIES}
    rows[COMBINED] = _score_row(result.combined())
    return rows


def eval_report(results: list[SequenceScores], cfg: MetricConfig) -> dict:
    """Full-precision JSON-ready evaluation report with per-sequence rows."""
    if not results:
        raise PegevalError("no sequences evaluated")
    sequences = []
    stacks: dict[str, list[list[float]]] = {name: [] for name in _ROW_GRANULARITIES}
    for result in results:
        rows = _rows_for_sequence(result)
        for name in _ROW_GRANULARITIES:
            stacks[name].append(rows[name])
        sequences.append(
            {
                "sequence": result.sequence_id,
                "scores": {
                    name: dict(zip(EVAL_CSV_COLUMNS[2:], rows[name]))
                    for name in _ROW_GRANULARITIES
                },
            }
        )
    means = {
        name: dict(zip(EVAL_CSV_COLUMNS[2:], np.mean(stacks[name], axis=0).tolist()))
        for name in _ROW_GRANULARITIES
    }
    return {
        "config": {
            "acceptable_delay_ms": cfg.acceptable_delay_ms,
            "match_source_label": cfg.match_source_label,
        },
        "sequences": sequences,
        "mean": means,
    }


def eval_report_csv(report: dict) -> str:
    """Percentage CSV rendering of an eval report (two decimals)."""
    buf = io.StringIO()
    buf.write(_config_comment(report["config"]) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EVAL_CSV_COLUMNS)
    for entry in report["sequences"]:
        for name in _ROW_GRANULARITIES:
            scores = entry["scores"][name]
            writer.writerow(
                [entry["sequence"], name]
                + [f"{100.0 * scores[c]:.2f}" for c in EVAL_CSV_COLUMNS[2:]]
            )
    for name in _ROW_GRANULARITIES:
        scores = report["mean"][name]
        writer.writerow(
            ["mean", name] + [f"{100.0 * scores[c]:.2f}" for c in EVAL_CSV_COLUMNS[2:]]
        )
    return buf.getvalue()


def ranking_report(
    table: RankingTable,
    verdicts: dict[str, StabilityVerdict],
    config: dict,
    bootstrap: BootstrapReport | None = None,
) -> dict:
    methods = {
        name: {"aggregate": ranking.aggregate, "ranks": ranking.ranks}
        for name, ranking in table.methods.items()
    }
    stability = {
        team: {
            "stable": v.stable,
            "rank": v.rank,
            "rank_range": list(v.rank_range),
            "tied_with": list(v.tied_with),
        }
        for team, v in verdicts.items()
    }
    out = {
        "config": config,
        "teams": list(table.teams),
        "methods": methods,
        "stability": stability,
    }
    if bootstrap is not None:
        out["bootstrap"] = {
            "method": bootstrap.method,
            "n_replicates": bootstrap.n_replicates,
            "seed": bootstrap.seed,
            "rank_histograms": {
                t: {str(r): c for r, c in sorted(h.items())}
                for t, h in bootstrap.rank_histograms.items()
            },
            "mean_kendall_tau": bootstrap.mean_kendall_tau,
            "full_ranks": bootstrap.full_ranks,
        }
    return out


def ranking_report_csv(report: dict) -> str:
    """Long-format (team, method, aggregate, rank) CSV for plotting."""
    buf = io.StringIO()
    buf.write(_config_comment(report["config"]) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["team", "method", "aggregate", "rank"])
    for method, data in report["methods"].items():
        for team in report["teams"]:
            writer.writerow(
                [team, method, f"{data['aggregate'][team]:.6f}", data["ranks"][team]]
            )
    return buf.getvalue()


def load_score_table(path: str | Path, percent: str = "auto") -> list[TeamTaskResults]:
    """Load per-(team, sequence, granularity) scores from CSV.

    Expected columns: team, sequence, granularity, score. ``granularity`` is
    one of phase/step/verb_left/verb_right or "combined" for pre-aggregated
    scores. Values may be fractions or percentages; with percent="auto" any
    file whose maximum exceeds 1.5 is treated as percentages.
    """
    rows = []
    with open(path, newline="") as fh:
        text = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(text)
        required = {"team", "sequence", "granularity", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise PegevalError(
                f"{path}: expected columns {sorted(required)}, found {reader.fieldnames}"
            )
        for row in reader:
            rows.append(
                (row["team"], row["sequence"], row["granularity"], float(row["score"]))
            )
    if not rows:
        raise PegevalError(f"{path}: no score rows")
    values = np.array([r[3] for r in rows])
    scale = 1.0
    if percent == "percent" or (percent == "auto" and values.max() > 1.5):
        scale = 100.0

    teams = sorted({r[0] for r in rows})
    results = []
    for team in teams:
        team_rows = [r for r in rows if r[0] == team]
        seq_ids = tuple(sorted({r[1] for r in team_rows}))
        index = {s: i for i, s in enumerate(seq_ids)}
        by_gran: dict[str, np.ndarray] = {}
        for _, seq, gran, value in team_rows:
            col = by_gran.setdefault(gran, np.full(len(seq_ids), np.nan))
            col[index[seq]] = value / scale
        for gran, col in by_gran.items():
            if np.isnan(col).any():
                missing = seq_ids[int(np.isnan(col).argmax())]
                raise PegevalError(f"{team}/{gran}: missing score for sequence {missing}")
        if COMBINED in by_gran:
            if len(by_gran) > 1:
                raise PegevalError(
                    f"{team}: mixing 'combined' with per-granularity rows is ambiguous"
                )
            results.append(TeamTaskResults.from_combined(team, seq_ids, by_gran[COMBINED]))
            continue
        per_granularity = {
            g: by_gran.get(g.value) for g in GRANULARITIES
        }
        unknown = set(by_gran) - {g.value for g in GRANULARITIES}
        if unknown:
            raise PegevalError(f"{team}: unknown granularities {sorted(unknown)}")
        results.append(TeamTaskResults(team, seq_ids, per_granularity))
    return results


def load_sequence_scores(path: str | Path, column: str | None = None) -> np.ndarray:
    """Load one score column from a per-sequence CSV, ordered by sequence id.

    Picks ``column`` if given, else the first of "score"/"ad_accuracy" found.
    """
    with open(path, newline="") as fh:
        text = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(text)
        fields = reader.fieldnames or []
        if column is None:
            for candidate in ("score", "ad_accuracy"):
                if candidate in fields:
                    column = candidate
                    break
        if column is None or column not in fields:
            raise PegevalError(f"{path}: no usable score column in {fields}")
        if "sequence" in fields:
            pairs = [(row["sequence"], float(row[column])) for row in reader]
            pairs.sort(key=lambda p: p[0])
            return np.array([v for _, v in pairs])
        return np.array([float(row[column]) for row in reader])


def write_json(data: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")
