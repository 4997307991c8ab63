"""Shared input/output logic for the stub models.

Deliberately standard-library only: stubs launch cold for every prefix of a
causality test, so import cost dominates their runtime. Loaded by the stub
scripts via an explicit file-path import to stay runnable both as scripts and
through ``python -m``.
"""

from __future__ import annotations

import argparse
import math
import os

PHASES = ["TransferL2R", "TransferR2L", "Idle"]
STEPS = [f"Block{i}{d}" for d in ("L2R", "R2L") for i in range(1, 7)] + ["Idle"]
VERBS = ["Catch", "Drop", "Extract", "Hold", "Insert", "Touch", "Idle"]

# (kinematics column, integer scale, label table) per output column; scales
# are arbitrary constants chosen so neighbouring frames often change label
TRACKS = [
    (0, 3.7, PHASES),
    (1, 5.3, STEPS),
    (2, 7.1, VERBS),
    (16, 6.4, VERBS),
]


def read_kinematics(input_dir: str) -> list[list[float]]:
    rows = []
    with open(os.path.join(input_dir, "kinematics.csv")) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                if not rows:
                    continue  # header
                raise
    return rows


def bucket(value: float, scale: float, n: int) -> int:
    return int(math.floor(value * scale)) % n


def frame_local_labels(rows: list[list[float]]) -> list[list[str]]:
    """Label names per frame derived from that frame's row alone."""
    out = []
    for row in rows:
        out.append([table[bucket(row[col], scale, len(table))] for col, scale, table in TRACKS])
    return out


def history_labels(rows: list[list[float]]) -> list[list[str]]:
    """Label names per frame derived from running column sums: causal."""
    sums = [0.0] * len(TRACKS)
    out = []
    for row in rows:
        labels = []
        for k, (col, scale, table) in enumerate(TRACKS):
            sums[k] += row[col]
            labels.append(table[bucket(sums[k], scale, len(table))])
        out.append(labels)
    return out


def write_prediction(frames: list[list[str]], output: str) -> None:
    lines = [f"{i}\t" + "\t".join(labels) for i, labels in enumerate(frames)]
    with open(output, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_args(description: str) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--input", required=True)
    parser.add_argument("--output", required=True)
    return parser.parse_args()
