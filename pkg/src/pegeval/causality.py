"""Prefix-replay causality verification for an external model command.

A model is run once per growing input prefix; the final-frame prediction of
each run forms the definitely-causal sequence. The model is causal iff that
sequence matches the prediction it makes when given the full input in one
shot, across all four granularities. Models are launched cold for every
prefix so no state can leak between invocations.

Wall times are captured per invocation and feed an advisory throughput check
(marginal latency versus the inter-frame budget); timing never influences the
causality verdict.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import GRANULARITIES, Granularity, PegevalError, WorkflowSequence, vocabulary_for
from .ingest import ParseError, parse_annotation_file

PARALLELISM_ENV = "PEGEVAL_PARALLEL"
DEFAULT_PREFIX_COUNT = 300
FRAME_FILES = ("kinematics.csv", "annotation.txt")  # line-per-frame inputs


class CyclicDependencyError(PegevalError):
    pass


@dataclass(frozen=True)
class ModelUnderTest:
    """Launch description for an external model.

    ``command`` must contain the placeholders ``{input}`` (a directory of
    modality files) and ``{output}`` (the prediction file to write), each
    exactly once.
    """

    command: str
    workdir: str | None = None
    timeout_s: float = 60.0

    def __post_init__(self):
        for placeholder in ("{input}", "{output}"):
            if self.command.count(placeholder) != 1:
                raise PegevalError(
                    f"command must contain {placeholder} exactly once: {self.command!r}"
                )

    def argv(self, input_dir: Path, output_file: Path) -> list[str]:
        return [
            tok.replace("{input}", str(input_dir)).replace("{output}", str(output_file))
            for tok in shlex.split(self.command)
        ]


class CausalityStatus(str, Enum):
    CAUSAL = "causal"
    NON_CAUSAL = "non_causal"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Divergence:
    frame: int
    granularity: Granularity
    causal_label: str
    full_label: str


@dataclass(frozen=True)
class CausalityVerdict:
    status: CausalityStatus
    first_divergence: Divergence | None
    prefix_count: int
    wall_times_ms: tuple[float, ...]  # one per prefix invocation, by prefix index
    full_run_ms: float | None = None
    diagnostics: tuple[str, ...] = ()

    @property
    def causal(self) -> bool:
        return self.status is CausalityStatus.CAUSAL

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "causal": None if self.status is CausalityStatus.INDETERMINATE else self.causal,
            "first_divergence": None,
            "prefix_count": self.prefix_count,
            "timings": {
                "prefix_wall_times_ms": list(self.wall_times_ms),
                "full_run_ms": self.full_run_ms,
            },
            "diagnostics": list(self.diagnostics),
        }
        if self.first_divergence is not None:
            out["first_divergence"] = {
                "frame": self.first_divergence.frame,
                "granularity": self.first_divergence.granularity.value,
                "causal_label": self.first_divergence.causal_label,
                "full_label": self.first_divergence.full_label,
            }
        return out


def count_frames(input_dir: str | Path) -> int:
    """Number of frames in an input directory (lines of its per-frame files)."""
    input_dir = Path(input_dir)
    for name in FRAME_FILES:
        path = input_dir / name
        if path.exists():
            lines = path.read_text().splitlines()
            if name == "annotation.txt" and lines and not lines[0].split("\t")[0].isdigit():
                lines = lines[1:]
            return sum(1 for line in lines if line.strip())
    raise PegevalError(f"no per-frame input file found in {input_dir}")


def make_prefixes(input_dir: str | Path, dest_dir: str | Path, n: int) -> list[Path]:
    """Write the first n growing prefixes of an input directory.

    Prefix k (1-based) contains frames 0..k-1 of every per-frame file: the
    first k data lines, byte-identical to the source. Frame-per-file inputs
    (a ``masks/`` directory) are copied as their first k files.
    """
    input_dir = Path(input_dir)
    dest_dir = Path(dest_dir)
    total = count_frames(input_dir)
    if n > total:
        raise PegevalError(f"requested {n} prefixes but input has {total} frames")
    sources: list[tuple[str, list[str], list[str]]] = []  # name, header, lines
    for name in FRAME_FILES:
        path = input_dir / name
        if not path.exists():
            continue
        lines = path.read_text().splitlines(keepends=True)
        header: list[str] = []
        if name == "annotation.txt" and lines and not lines[0].split("\t")[0].isdigit():
            header, lines = lines[:1], lines[1:]
        sources.append((name, header, lines))
    mask_files: list[Path] = []
    masks = input_dir / "masks"
    if masks.is_dir():
        mask_files = sorted(masks.iterdir())
    out_dirs = []
    for k in range(1, n + 1):
        pdir = dest_dir / f"prefix_{k:04d}"
        pdir.mkdir(parents=True, exist_ok=True)
        for name, header, lines in sources:
            (pdir / name).write_text("".join(header + lines[:k]))
        if mask_files:
            mdir = pdir / "masks"
            mdir.mkdir(exist_ok=True)
            for f in mask_files[:k]:
                (mdir / f.name).write_bytes(f.read_bytes())
        out_dirs.append(pdir)
    return out_dirs


@dataclass
class _RunOutcome:
    ok: bool
    elapsed_ms: float
    sequence: WorkflowSequence | None
    error: str | None


def _run_model(model: ModelUnderTest, input_dir: Path, output_file: Path) -> _RunOutcome:
    argv = model.argv(input_dir, output_file)
    start = time.perf_counter()
    try:
        proc = subprocess.run(
            argv,
            cwd=model.workdir,
            timeout=model.timeout_s,
            capture_output=True,
            text=True,
        )
    except subprocess.TimeoutExpired:
        elapsed = (time.perf_counter() - start) * 1000.0
        return _RunOutcome(False, elapsed, None, f"timeout after {model.timeout_s}s")
    except OSError as exc:
        elapsed = (time.perf_counter() - start) * 1000.0
        return _RunOutcome(False, elapsed, None, f"launch failed: {exc}")
    elapsed = (time.perf_counter() - start) * 1000.0
    if proc.returncode != 0:
        tail = (proc.stderr or proc.stdout or "").strip().splitlines()[-3:]
        return _RunOutcome(
            False, elapsed, None,
            f"exit code {proc.returncode}: " + " | ".join(tail)
        )
    try:
        seq = parse_annotation_file(output_file.read_bytes())
    except (OSError, ParseError) as exc:
        return _RunOutcome(False, elapsed, None, f"unparseable output: {exc}")
    return _RunOutcome(True, elapsed, seq, None)


def run_causality_test(
    model: ModelUnderTest,
    input_dir: str | Path,
    n: int | None = None,
    parallelism: int | None = None,
) -> CausalityVerdict:
    """Prefix-replay causality test of a model on one input directory.

    ``n`` defaults to min(300, frame count). The verdict is indeterminate
    (never silently non-causal) if any invocation fails, times out, or
    produces unparseable output.
    """
    input_dir = Path(input_dir)
    total = count_frames(input_dir)
    if n is None:
        n = min(DEFAULT_PREFIX_COUNT, total)
    if parallelism is None:
        parallelism = int(os.environ.get(PARALLELISM_ENV, "1"))
    parallelism = max(1, parallelism)

    with tempfile.TemporaryDirectory(prefix="pegeval-causality-") as tmp:
        tmp_path = Path(tmp)
        full = _run_model(model, input_dir, tmp_path / "full_prediction.txt")
        if not full.ok:
            return CausalityVerdict(
                CausalityStatus.INDETERMINATE, None, n, (), full.elapsed_ms,
                (f"full input run failed: {full.error}",),
            )
        if len(full.sequence) != total:
            return CausalityVerdict(
                CausalityStatus.INDETERMINATE, None, n, (), full.elapsed_ms,
                (f"full run produced {len(full.sequence)} records for {total} frames",),
            )

        prefix_dirs = make_prefixes(input_dir, tmp_path / "prefixes", n)

        def run_one(k: int) -> _RunOutcome:
            out = tmp_path / f"prediction_{k + 1:04d}.txt"
            outcome = _run_model(model, prefix_dirs[k], out)
            if outcome.ok and len(outcome.sequence) != k + 1:
                return _RunOutcome(
                    False, outcome.elapsed_ms, None,
                    f"prefix {k + 1} produced {len(outcome.sequence)} records",
                )
            return outcome

        if parallelism == 1:
            outcomes = [run_one(k) for k in range(n)]
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                outcomes = list(pool.map(run_one, range(n)))

    wall_times = tuple(o.elapsed_ms for o in outcomes)
    failures = [
        f"prefix {k + 1}: {o.error}" for k, o in enumerate(outcomes) if not o.ok
    ]
    if failures:
        return CausalityVerdict(
            CausalityStatus.INDETERMINATE, None, n, wall_times, full.elapsed_ms,
            tuple(failures[:10]),
        )

    # definitely-causal labels: the final frame of each prefix run
    causal_labels = {
        g: np.array([o.sequence.track(g).labels[-1] for o in outcomes], dtype=np.int64)
        for g in GRANULARITIES
    }
    divergence = None
    for frame in range(n):
        for g in GRANULARITIES:
            causal_ix = int(causal_labels[g][frame])
            full_ix = int(full.sequence.track(g).labels[frame])
            if causal_ix != full_ix:
                vocab = vocabulary_for(g)
                divergence = Divergence(
                    frame, g, vocab.labels[causal_ix], vocab.labels[full_ix]
                )
                break
        if divergence is not None:
            break

    status = CausalityStatus.CAUSAL if divergence is None else CausalityStatus.NON_CAUSAL
    return CausalityVerdict(status, divergence, n, wall_times, full.elapsed_ms)


@dataclass(frozen=True)
class ThroughputReport:
    """Advisory marginal-latency check against the inter-frame budget."""

    budget_ms: float
    marginal_ms: tuple[float, ...]  # successive differences of prefix wall times
    median_marginal_ms: float
    per_invocation_pass: tuple[bool, ...]
    passed: bool

    def to_json(self) -> dict:
        return {
            "budget_ms": self.budget_ms,
            "median_marginal_ms": self.median_marginal_ms,
            "passed": self.passed,
            "marginal_ms": list(self.marginal_ms),
            "per_invocation_pass": list(self.per_invocation_pass),
        }


def throughput_check(wall_times_ms, sample_period_ms: float) -> ThroughputReport:
    """Marginal per-frame latency versus the sampling budget.

    Each growing prefix adds one frame, so the wall-time difference between
    successive invocations estimates the per-frame cost; the median of those
    differences is the robust overall estimate.
    """
    times = np.asarray(wall_times_ms, dtype=np.float64)
    if times.size < 2:
        raise PegevalError("need at least two invocations to estimate marginal latency")
    marginal = np.diff(times)
    median = float(np.median(marginal))
    flags = tuple(bool(m <= sample_period_ms) for m in marginal)
    return ThroughputReport(
        budget_ms=float(sample_period_ms),
        marginal_ms=tuple(float(m) for m in marginal),
        median_marginal_ms=median,
        per_invocation_pass=flags,
        passed=median <= sample_period_ms,
    )


def execution_time_report(entries: dict[str, tuple[float, tuple[str, ...]]]) -> dict[str, float]:
    """Total duration per task, adding each unique transitive dependency once.

    ``entries`` maps task name to (own duration, dependency task names).
    Raises CyclicDependencyError on dependency cycles.
    """
    def transitive(task: str, stack: tuple[str, ...]) -> set[str]:
        if task in stack:
            cycle = " -> ".join(stack + (task,))
            raise CyclicDependencyError(f"dependency cycle: {cycle}")
        if task not in entries:
            raise PegevalError(f"unknown dependency {task!r}")
        deps: set[str] = set()
        for dep in entries[task][1]:
            deps.add(dep)
            deps |= transitive(dep, stack + (task,))
        return deps

    totals = {}
    for task, (duration, _deps) in entries.items():
        closure = transitive(task, ())
        totals[task] = float(duration) + float(
            sum(entries[d][0] for d in closure)
        )
    return totals


def write_verdict(verdict: CausalityVerdict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(verdict.to_json(), indent=2) + "\n")
