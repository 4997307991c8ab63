"""Command-line interface: eval, rank, stats, causality, gen.

Exit codes: 0 success, 1 validation or input error, 2 causality harness
indeterminate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .causality import (
    PARALLELISM_ENV,
    CausalityStatus,
    ModelUnderTest,
    run_causality_test,
    throughput_check,
)
from .core import MetricConfig, PegevalError
from .ingest import parse_annotation_file, parse_mask
from .metrics import evaluate_sequence, mean_iou_aggregate
from .ranking import RANKING_METHODS, bootstrap_stability, rank_all_methods, stability
from .report import (
    eval_report,
    eval_report_csv,
    load_score_table,
    load_sequence_scores,
    ranking_report,
    ranking_report_csv,
    write_json,
)
from .stats import DEFAULT_ALPHA, compare_tasks, mann_whitney_u
from .synth import CorpusSpec, GeneratorParams, write_corpus

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INDETERMINATE = 2


def _sequence_dirs(root: Path) -> list[Path]:
    return sorted(p for p in root.iterdir() if p.is_dir())


def _load_sequence(seq_dir: Path):
    annotation = seq_dir / "annotation.txt"
    if not annotation.exists():
        raise PegevalError(f"{seq_dir}: missing annotation.txt")
    return parse_annotation_file(annotation.read_bytes(), sequence_id=seq_dir.name)


def cmd_eval(args) -> int:
    gt_root = Path(args.gt_dir)
    pred_root = Path(args.pred_dir)
    cfg = MetricConfig(
        acceptable_delay_ms=args.delay_ms,
        match_source_label=not args.dest_only_matching,
    )
    results = []
    iou_pairs = []
    for gt_dir in _sequence_dirs(gt_root):
        pred_dir = pred_root / gt_dir.name
        if not pred_dir.is_dir():
            raise PegevalError(f"prediction for sequence {gt_dir.name} not found")
        gt = _load_sequence(gt_dir)
        pred = _load_sequence(pred_dir)
        results.append(evaluate_sequence(gt, pred, cfg))
        if args.masks:
            gt_masks = sorted((gt_dir / "masks").glob("*")) if (gt_dir / "masks").is_dir() else []
            for gt_mask_path in gt_masks:
                pred_mask_path = pred_dir / "masks" / gt_mask_path.name
                if not pred_mask_path.exists():
                    raise PegevalError(f"missing predicted mask {pred_mask_path}")
                iou_pairs.append(
                    (
                        parse_mask(gt_mask_path.read_bytes(), strict=False),
                        parse_mask(pred_mask_path.read_bytes(), strict=False),
                    )
                )
    if not results:
        raise PegevalError(f"no sequence directories under {gt_root}")

    report = eval_report(results, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in args.format:
        write_json(report, out_dir / "scores.json")
    if "csv" in args.format:
        (out_dir / "scores.csv").write_text(eval_report_csv(report))
    if iou_pairs:
        agg = mean_iou_aggregate(iou_pairs)
        write_json(
            {"config": report["config"], "mean_iou": agg.as_dict()},
            out_dir / "iou.json",
        )
    mean_ad = report["mean"]["combined"]["ad_accuracy"]
    print(f"evaluated {len(results)} sequences; mean combined AD accuracy {100 * mean_ad:.2f}")
    return EXIT_OK


def cmd_rank(args) -> int:
    results = load_score_table(args.scores_csv)
    methods = tuple(args.methods) if args.methods else RANKING_METHODS
    table = rank_all_methods(results, methods=methods, alpha=args.alpha, holm=args.holm)
    verdicts = stability(table)
    boot = None
    if args.bootstrap > 0:
        boot = bootstrap_stability(
            results, n_replicates=args.bootstrap, seed=args.seed, alpha=args.alpha
        )
    config = {
        "alpha": args.alpha,
        "holm": args.holm,
        "methods": list(methods),
        "bootstrap": args.bootstrap,
        "seed": args.seed,
    }
    report = ranking_report(table, verdicts, config, bootstrap=boot)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in args.format:
        write_json(report, out_dir / "ranking.json")
    if "csv" in args.format:
        (out_dir / "ranking.csv").write_text(ranking_report_csv(report))
    for team in table.teams:
        verdict = verdicts[team]
        if verdict.stable:
            print(f"{team}: rank {verdict.rank} (stable)")
        else:
            tied = ", ".join(verdict.tied_with) or "none"
            print(f"{team}: ranks {verdict.rank_range} (tie with: {tied})")
    return EXIT_OK


def cmd_stats(args) -> int:
    a = load_sequence_scores(args.scores_a, column=args.column)
    b = load_sequence_scores(args.scores_b, column=args.column)
    if args.test == "wilcoxon":
        comparison = compare_tasks(a, b, alpha=args.alpha, alternative=args.alternative)
        if comparison.identical:
            print("no difference: all paired differences are zero")
            print(f"significant at alpha={args.alpha}: no")
            return EXIT_OK
        result = comparison.test
        significant = comparison.significant
    else:
        result = mann_whitney_u(a, b, alternative=args.alternative)
        significant = result.p_value < args.alpha
    print(f"test: {args.test} ({result.alternative.value})")
    print(f"statistic: {result.statistic}")
    print(f"p_value: {result.p_value}")
    print(f"method: {result.method.value} (n_effective={result.n_effective})")
    print(f"significant at alpha={args.alpha}: {'yes' if significant else 'no'}")
    return EXIT_OK


def cmd_causality(args) -> int:
    model = ModelUnderTest(args.cmd, workdir=args.workdir, timeout_s=args.timeout)
    verdict = run_causality_test(
        model, args.input_dir, n=args.prefixes, parallelism=args.parallel
    )
    payload = verdict.to_json()
    if len(verdict.wall_times_ms) >= 2:
        payload["throughput"] = throughput_check(
            verdict.wall_times_ms, args.budget_ms
        ).to_json()
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if verdict.status is CausalityStatus.INDETERMINATE:
        return EXIT_INDETERMINATE
    print(f"verdict: {verdict.status.value}")
    return EXIT_OK


def cmd_gen(args) -> int:
    params = GeneratorParams(
        seed=args.seed,
        rate_hz=args.rate_hz,
        missing_insert_step=5 if args.anomaly == "missing-insert" else None,
        step_overlap_at=2 if args.anomaly == "step-overlap" else None,
    )
    spec = CorpusSpec(n_sequences=args.sequences, base_seed=args.seed, params=params)
    ids = write_corpus(args.out_dir, spec)
    print(f"wrote {len(ids)} sequences to {args.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pegeval",
        description="Peg-transfer workflow recognition evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="score predicted against ground-truth sequences")
    p_eval.add_argument("gt_dir")
    p_eval.add_argument("pred_dir")
    p_eval.add_argument("--out", required=True, help="report output directory")
    p_eval.add_argument("--delay-ms", type=float, default=250.0)
    p_eval.add_argument(
        "--dest-only-matching",
        action="store_true",
        help="match transitions by destination label only",
    )
    p_eval.add_argument("--masks", action="store_true", help="also score masks/ directories")
    p_eval.add_argument("--format", nargs="+", choices=("csv", "json"), default=["csv", "json"])
    p_eval.set_defaults(func=cmd_eval)

    p_rank = sub.add_parser("rank", help="rank teams from a score table")
    p_rank.add_argument("scores_csv")
    p_rank.add_argument("--out", required=True)
    p_rank.add_argument("--methods", nargs="+", choices=RANKING_METHODS)
    p_rank.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p_rank.add_argument("--holm", action="store_true", help="Holm correction for testBased")
    p_rank.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicates (0 = off)")
    p_rank.add_argument("--seed", type=int, default=0)
    p_rank.add_argument("--format", nargs="+", choices=("csv", "json"), default=["csv", "json"])
    p_rank.set_defaults(func=cmd_rank)

    p_stats = sub.add_parser("stats", help="significance test between two score files")
    p_stats.add_argument("scores_a")
    p_stats.add_argument("scores_b")
    p_stats.add_argument("--test", choices=("wilcoxon", "mannwhitney"), default="wilcoxon")
    p_stats.add_argument(
        "--alternative", choices=("two_sided", "greater", "less"), default="two_sided"
    )
    p_stats.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p_stats.add_argument("--column", default=None, help="score column name")
    p_stats.set_defaults(func=cmd_stats)

    p_caus = sub.add_parser("causality", help="prefix-replay causality test of a model command")
    p_caus.add_argument("input_dir")
    p_caus.add_argument(
        "--cmd", required=True, help="model command with {input} and {output} placeholders"
    )
    p_caus.add_argument("--prefixes", type=int, default=None)
    p_caus.add_argument("--timeout", type=float, default=60.0)
    p_caus.add_argument(
        "--parallel",
        type=int,
        default=int(os.environ.get(PARALLELISM_ENV, "1")),
        help=f"concurrent invocations (default from ${PARALLELISM_ENV})",
    )
    p_caus.add_argument("--budget-ms", type=float, default=1000.0 / 30.0)
    p_caus.add_argument("--workdir", default=None)
    p_caus.add_argument("--out", default=None, help="verdict JSON path (default stdout)")
    p_caus.set_defaults(func=cmd_causality)

    p_gen = sub.add_parser("gen", help="generate a synthetic ground-truth corpus")
    p_gen.add_argument("out_dir")
    p_gen.add_argument("--sequences", type=int, default=10)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--rate-hz", type=float, default=30.0)
    p_gen.add_argument(
        "--anomaly", choices=("missing-insert", "step-overlap"), default=None
    )
    p_gen.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PegevalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
