"""Runnable stub models for exercising the causality harness.

Each stub is a self-contained script (standard library only, so hundreds of
cold launches stay cheap) following the model protocol::

    python3 <stub.py> --input <dir> --output <file>

It reads ``kinematics.csv`` from the input directory and writes an
annotation-format prediction with one record per input frame.

* ``causal_echo``: every frame's labels depend only on frames up to it.
* ``lookahead``: labels peek five frames ahead (clamped at the end).
* ``median_filter``: causal core followed by a centered median filter, which
  makes the full pipeline non-causal.
* ``crash``: exits non-zero without writing output.
"""

from __future__ import annotations

import shlex
import sys
from pathlib import Path

STUB_NAMES = ("causal_echo", "lookahead", "median_filter", "crash")


def stub_path(name: str) -> Path:
    if name not in STUB_NAMES:
        raise ValueError(f"unknown stub {name!r}; available: {STUB_NAMES}")
    return Path(__file__).parent / f"{name}.py"


def stub_command(name: str, python: str = sys.executable) -> str:
    """Model command template for a bundled stub, ready for ModelUnderTest."""
    return (
        f"{shlex.quote(python)} {shlex.quote(str(stub_path(name)))} "
        "--input {input} --output {output}"
    )
