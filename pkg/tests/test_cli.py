from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from pegeval.cli import EXIT_INDETERMINATE, EXIT_OK, EXIT_VALIDATION, main
from pegeval.core import GRANULARITIES, MetricConfig
from pegeval.ingest import emit_annotation, parse_annotation_file
from pegeval.metrics import evaluate_sequence
from pegeval.report import load_score_table, load_sequence_scores
from pegeval.stubs import stub_command
from pegeval.synth import CorpusSpec, PerturbParams, perturb, write_corpus

from conftest import PUBLISHED


@pytest.fixture(scope="module")
def corpus(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("cli") / "gt"
    write_corpus(root, CorpusSpec(n_sequences=2, base_seed=20))
    return root


@pytest.fixture(scope="module")
def perturbed(tmp_path_factory, corpus) -> Path:
    root = tmp_path_factory.mktemp("cli-pred") / "pred"
    root.mkdir(parents=True)
    for seq_dir in sorted(p for p in corpus.iterdir() if p.is_dir()):
        seq = parse_annotation_file(
            (seq_dir / "annotation.txt").read_bytes(), sequence_id=seq_dir.name
        )
        pred = perturb(seq, PerturbParams(seed=3, transition_jitter_ms=(-150.0, 150.0)))
        out = root / seq_dir.name
        out.mkdir()
        (out / "annotation.txt").write_text(emit_annotation(pred))
    return root


class TestGenCommand:
    def test_gen_writes_corpus(self, tmp_path):
        assert main(["gen", str(tmp_path / "c"), "--sequences", "2", "--seed", "3"]) == EXIT_OK
        manifest = json.loads((tmp_path / "c" / "manifest.json").read_text())
        assert len(manifest["sequences"]) == 2

    def test_gen_deterministic(self, tmp_path):
        main(["gen", str(tmp_path / "a"), "--sequences", "1", "--seed", "9"])
        main(["gen", str(tmp_path / "b"), "--sequences", "1", "--seed", "9"])
        a = (tmp_path / "a" / "0009" / "annotation.txt").read_bytes()
        b = (tmp_path / "b" / "0009" / "annotation.txt").read_bytes()
        assert a == b


class TestEvalCommand:
    def test_identical_dirs_all_hundred(self, corpus, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(["eval", str(corpus), str(corpus), "--out", str(out)]) == EXIT_OK
        lines = (out / "scores.csv").read_text().splitlines()
        assert lines[0].startswith("# config:")
        for line in lines[2:]:
            for value in line.split(",")[2:]:
                assert value == "100.00"

    def test_matches_library_computation(self, corpus, perturbed, tmp_path):
        out = tmp_path / "report"
        assert main(["eval", str(corpus), str(perturbed), "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "scores.json").read_text())
        cfg = MetricConfig()
        for entry in report["sequences"]:
            gt = parse_annotation_file(
                (corpus / entry["sequence"] / "annotation.txt").read_bytes()
            )
            pred = parse_annotation_file(
                (perturbed / entry["sequence"] / "annotation.txt").read_bytes()
            )
            scores = evaluate_sequence(gt, pred, cfg)
            for g in GRANULARITIES:
                expected = scores.per_granularity[g].application_dependent.balanced_accuracy
                assert entry["scores"][g.value]["ad_accuracy"] == pytest.approx(expected)

    def test_reruns_byte_identical(self, corpus, perturbed, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["eval", str(corpus), str(perturbed), "--out", str(out_a)])
        main(["eval", str(corpus), str(perturbed), "--out", str(out_b)])
        assert (out_a / "scores.csv").read_bytes() == (out_b / "scores.csv").read_bytes()
        assert (out_a / "scores.json").read_bytes() == (out_b / "scores.json").read_bytes()

    def test_missing_counterpart_fails(self, corpus, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = main(["eval", str(corpus), str(empty), "--out", str(tmp_path / "r")])
        assert code == EXIT_VALIDATION

    def test_delay_flag_respected(self, corpus, perturbed, tmp_path):
        out_tight = tmp_path / "tight"
        out_wide = tmp_path / "wide"
        main(["eval", str(corpus), str(perturbed), "--out", str(out_tight), "--delay-ms", "0"])
        main(["eval", str(corpus), str(perturbed), "--out", str(out_wide), "--delay-ms", "250"])
        tight = json.loads((out_tight / "scores.json").read_text())
        wide = json.loads((out_wide / "scores.json").read_text())
        assert (
            wide["mean"]["combined"]["ad_accuracy"]
            > tight["mean"]["combined"]["ad_accuracy"]
        )
        # with d=0 the AD scores equal the frame-by-frame scores
        assert (
            tight["mean"]["combined"]["ad_accuracy"]
            == tight["mean"]["combined"]["fbf_accuracy"]
        )


def write_rank_csv(path: Path, teams: dict[str, list[float]]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["team", "sequence", "granularity", "score"])
        for team, scores in teams.items():
            for i, value in enumerate(scores):
                writer.writerow([team, f"s{i:02d}", "combined", f"{value}"])


class TestRankCommand:
    def test_rank_matches_library(self, tmp_path):
        scores = {
            "alpha": [0.90, 0.70, 0.80, 0.60],
            "beta": [0.85, 0.75, 0.70, 0.65],
            "gamma": [0.60, 0.80, 0.75, 0.70],
        }
        csv_path = tmp_path / "scores.csv"
        write_rank_csv(csv_path, scores)
        out = tmp_path / "rank"
        assert main(["rank", str(csv_path), "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "ranking.json").read_text())
        assert report["methods"]["meanThenRank"]["ranks"] == {
            "alpha": 1, "beta": 2, "gamma": 3,
        }
        assert report["stability"]["alpha"]["stable"] is True

    def test_bootstrap_section_present_and_deterministic(self, tmp_path):
        scores = {"a": [0.5, 0.9, 0.7, 0.6, 0.8], "b": [0.4, 0.8, 0.6, 0.5, 0.7]}
        csv_path = tmp_path / "scores.csv"
        write_rank_csv(csv_path, scores)
        out_a, out_b = tmp_path / "r1", tmp_path / "r2"
        main(["rank", str(csv_path), "--out", str(out_a), "--bootstrap", "25", "--seed", "7"])
        main(["rank", str(csv_path), "--out", str(out_b), "--bootstrap", "25", "--seed", "7"])
        assert (out_a / "ranking.json").read_bytes() == (out_b / "ranking.json").read_bytes()
        report = json.loads((out_a / "ranking.json").read_text())
        assert report["bootstrap"]["n_replicates"] == 25

    def test_csv_long_format(self, tmp_path):
        scores = {"a": [0.5, 0.9], "b": [0.4, 0.8]}
        csv_path = tmp_path / "scores.csv"
        write_rank_csv(csv_path, scores)
        out = tmp_path / "rank"
        main(["rank", str(csv_path), "--out", str(out)])
        lines = (out / "ranking.csv").read_text().splitlines()
        assert lines[1] == "team,method,aggregate,rank"
        assert len(lines) == 2 + 5 * 2  # header rows + five methods x two teams

    def test_percent_autodetect(self, tmp_path):
        csv_path = tmp_path / "scores.csv"
        write_rank_csv(csv_path, {"a": [88.5, 90.1], "b": [70.0, 72.0]})
        results = load_score_table(csv_path)
        assert results[0].combined_scores().max() <= 1.0


class TestStatsCommand:
    def test_wilcoxon_fixture_columns(self, capsys):
        code = main(
            [
                "stats",
                str(PUBLISHED / "hutom_task1.csv"),
                str(PUBLISHED / "hutom_task4.csv"),
                "--column",
                "ad_accuracy",
            ]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "significant at alpha=0.05: yes" in out

    def test_identical_inputs_no_difference(self, capsys):
        code = main(
            [
                "stats",
                str(PUBLISHED / "hutom_task4.csv"),
                str(PUBLISHED / "hutom_task4.csv"),
                "--column",
                "ad_accuracy",
            ]
        )
        assert code == EXIT_OK
        assert "no difference" in capsys.readouterr().out

    def test_mannwhitney(self, capsys):
        code = main(
            [
                "stats",
                str(PUBLISHED / "hutom_task1.csv"),
                str(PUBLISHED / "hutom_task4.csv"),
                "--test",
                "mannwhitney",
                "--column",
                "ad_accuracy",
            ]
        )
        assert code == EXIT_OK
        assert "p_value" in capsys.readouterr().out

    def test_column_loader_sorts_by_sequence(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("sequence,score\n002,0.2\n001,0.1\n")
        assert (load_sequence_scores(path) == np.array([0.1, 0.2])).all()


class TestCausalityCommand:
    def test_causal_stub_exit_zero(self, tmp_path, capsys):
        gen_dir = tmp_path / "probe"
        write_corpus(gen_dir, CorpusSpec(n_sequences=1, base_seed=42))
        seq_dir = next(p for p in gen_dir.iterdir() if p.is_dir())
        out = tmp_path / "verdict.json"
        code = main(
            [
                "causality",
                str(seq_dir),
                "--cmd",
                stub_command("causal_echo"),
                "--prefixes",
                "6",
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        verdict = json.loads(out.read_text())
        assert verdict["causal"] is True and verdict["status"] == "causal"
        assert "throughput" in verdict

    def test_crashing_stub_exit_two(self, tmp_path):
        gen_dir = tmp_path / "probe"
        write_corpus(gen_dir, CorpusSpec(n_sequences=1, base_seed=43))
        seq_dir = next(p for p in gen_dir.iterdir() if p.is_dir())
        code = main(
            [
                "causality",
                str(seq_dir),
                "--cmd",
                stub_command("crash"),
                "--prefixes",
                "3",
                "--out",
                str(tmp_path / "v.json"),
            ]
        )
        assert code == EXIT_INDETERMINATE
        verdict = json.loads((tmp_path / "v.json").read_text())
        assert verdict["status"] == "indeterminate" and verdict["causal"] is None

    def test_bad_template_exit_one(self, tmp_path):
        code = main(["causality", str(tmp_path), "--cmd", "model --input {input}"])
        assert code == EXIT_VALIDATION


class TestErrorPaths:
    def test_missing_input_dir_exit_one(self, tmp_path, capsys):
        code = main(["eval", str(tmp_path / "nope"), str(tmp_path), "--out", str(tmp_path / "o")])
        assert code == EXIT_VALIDATION
        assert "error:" in capsys.readouterr().err

    def test_malformed_rank_csv_exit_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("who,what\n1,2\n")
        code = main(["rank", str(bad), "--out", str(tmp_path / "o")])
        assert code == EXIT_VALIDATION
