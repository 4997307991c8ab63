"""Parsers and emitters for the on-disk exchange formats.

Three formats are supported:

* annotation files: one record per frame,
  ``timestamp<TAB>phase<TAB>step<TAB>verb_left<TAB>verb_right``. Parsing is
  whitespace/comma tolerant; canonical output is tab-separated with a header.
* kinematics: headerless CSV with 28 numeric columns per frame — per hand
  (left then right): position xyz (cm), rotation quaternion wxyz, forceps
  aperture angle (deg), linear velocity xyz (cm/s), angular velocity xyz
  (deg/s). A non-numeric first line is treated as a header and skipped.
* segmentation masks: lossless RGB rasters over a fixed six-colour palette.

Interval annotations (label, start_ms, end_ms) can be resampled to a dense
track at a fixed rate; frames covered by no interval become Idle and overlaps
resolve to the later-starting interval with a warning.
"""

from __future__ import annotations

import io
import re
import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .core import (
    DEFAULT_RATE_HZ,
    GRANULARITIES,
    Granularity,
    LabelTrack,
    PegevalError,
    WorkflowSequence,
    vocabulary_for,
)

KINEMATIC_DIMENSIONS = 28

KINEMATIC_COLUMNS = tuple(
    f"{hand}_{name}"
    for hand in ("left", "right")
    for name in (
        "pos_x", "pos_y", "pos_z",
        "quat_w", "quat_x", "quat_y", "quat_z",
        "aperture_deg",
        "lin_vel_x", "lin_vel_y", "lin_vel_z",
        "ang_vel_x", "ang_vel_y", "ang_vel_z",
    )
)

# class index -> RGB; order: background, base, left tool, right tool, pegs, blocks
MASK_PALETTE = (
    (0x00, 0x00, 0x00),
    (0xFF, 0xFF, 0xFF),
    (0xFF, 0x00, 0x00),
    (0x00, 0xFF, 0x00),
    (0x00, 0x00, 0xFF),
    (0xFF, 0x00, 0xFF),
)
MASK_CLASS_NAMES = ("background", "base", "left_instrument", "right_instrument", "pegs", "blocks")
N_MASK_CLASSES = len(MASK_PALETTE)

LOSSLESS_FORMATS = ("PNG", "BMP", "TIFF")


class ParseError(PegevalError):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class PaletteError(ParseError):
    """Off-palette pixel in strict mask parsing."""


@dataclass(frozen=True)
class IntervalAnnotation:
    """Sparse annotation for one granularity: (label, start_ms, end_ms) entries."""

    granularity: Granularity
    entries: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        vocab = vocabulary_for(self.granularity)
        for label, start, end in self.entries:
            vocab.index_of(label)
            if not start < end:
                raise PegevalError(f"interval ({label}, {start}, {end}) has start >= end")
        ordered = tuple(sorted(self.entries, key=lambda e: (e[1], e[2])))
        object.__setattr__(self, "entries", ordered)

    def overlaps(self) -> list[tuple[int, int]]:
        """Index pairs of entries that overlap in time (recorded anomalies)."""
        out = []
        for i in range(len(self.entries) - 1):
            if self.entries[i + 1][1] < self.entries[i][2]:
                out.append((i, i + 1))
        return out


@dataclass
class SegmentationMask:
    """Per-pixel class indices over the fixed six-colour palette."""

    class_map: np.ndarray  # (height, width) uint8 in 0..5
    off_palette_count: int = 0

    def __post_init__(self):
        arr = np.asarray(self.class_map, dtype=np.uint8)
        if arr.ndim != 2:
            raise PegevalError("class_map must be 2-D")
        if arr.size and arr.max() >= N_MASK_CLASSES:
            raise PegevalError(f"class index {int(arr.max())} outside 0..{N_MASK_CLASSES - 1}")
        self.class_map = arr

    @property
    def height(self) -> int:
        return self.class_map.shape[0]

    @property
    def width(self) -> int:
        return self.class_map.shape[1]


_SPLIT_RE = re.compile(r"[,\s]+")


def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def parse_annotation_file(
    data: bytes | str,
    sequence_id: str = "",
    sample_period_ms: float = 1000.0 / DEFAULT_RATE_HZ,
) -> WorkflowSequence:
    """Parse a per-frame annotation file into a WorkflowSequence.

    Timestamps must be consecutive integers starting at 0. Labels are matched
    case-insensitively against the granularity vocabularies.
    """
    text = _decode(data)
    columns: dict[Granularity, list[int]] = {g: [] for g in GRANULARITIES}
    vocabs = {g: vocabulary_for(g) for g in GRANULARITIES}
    expected_ts = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = _SPLIT_RE.split(line)
        if expected_ts == 0 and not fields[0].lstrip("+-").isdigit():
            continue  # header
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, found {len(fields)}", lineno)
        try:
            ts = int(fields[0])
        except ValueError:
            raise ParseError(f"timestamp {fields[0]!r} is not an integer", lineno) from None
        if ts != expected_ts:
            raise ParseError(f"timestamp {ts} is not consecutive (expected {expected_ts})", lineno)
        expected_ts += 1
        for g, token in zip(GRANULARITIES, fields[1:]):
            try:
                columns[g].append(vocabs[g].index_of(token))
            except KeyError as exc:
                raise ParseError(str(exc), lineno) from None
    if expected_ts == 0:
        raise ParseError("no records found")
    tracks = {
        g: LabelTrack(g, np.array(columns[g], dtype=np.int64), sample_period_ms)
        for g in GRANULARITIES
    }
    return WorkflowSequence(
        sequence_id,
        tracks[Granularity.PHASE],
        tracks[Granularity.STEP],
        tracks[Granularity.VERB_LEFT],
        tracks[Granularity.VERB_RIGHT],
    )


ANNOTATION_HEADER = "timestamp\tphase\tstep\tverb_left\tverb_right"


def emit_annotation(seq: WorkflowSequence) -> str:
    """Canonical tab-separated annotation text (with header) for a sequence."""
    names = {g: seq.track(g).label_names() for g in GRANULARITIES}
    lines = [ANNOTATION_HEADER]
    for i in range(len(seq)):
        lines.append(
            "\t".join(
                [str(i)]
                + [names[g][i] for g in GRANULARITIES]
            )
        )
    return "\n".join(lines) + "\n"


def resample_intervals(
    ann: IntervalAnnotation,
    rate_hz: float = DEFAULT_RATE_HZ,
    duration_ms: float | None = None,
) -> LabelTrack:
    """Sample an interval annotation to a dense track at ``rate_hz``.

    Frame i (at time i*1000/rate_hz) takes the label of the interval
    containing that time under half-open [start, end) containment; uncovered
    frames become Idle. When intervals overlap, the later-starting one wins
    and a warning is emitted.
    """
    if rate_hz <= 0:
        raise PegevalError("rate_hz must be positive")
    if duration_ms is None:
        duration_ms = max((end for _, _, end in ann.entries), default=0.0)
    n_frames = int(np.ceil(duration_ms * rate_hz / 1000.0))
    if n_frames < 1:
        raise PegevalError("duration too short for a single frame")
    vocab = vocabulary_for(ann.granularity)
    period = 1000.0 / rate_hz
    times = np.arange(n_frames, dtype=np.float64) * period
    labels = np.full(n_frames, vocab.idle_index, dtype=np.int64)
    covered = np.zeros(n_frames, dtype=bool)
    overlapped = False
    # entries are sorted by start; later-starting entries overwrite earlier ones
    for label, start, end in ann.entries:
        sel = (times >= start) & (times < end)
        if (sel & covered).any():
            overlapped = True
        labels[sel] = vocab.index_of(label)
        covered |= sel
    if overlapped:
        warnings.warn(
            f"overlapping {ann.granularity.value} intervals resolved to the "
            "later-starting entry",
            stacklevel=2,
        )
    return LabelTrack(ann.granularity, labels, period)


def parse_kinematics(data: bytes | str, column_map: list[int] | None = None) -> np.ndarray:
    """Parse kinematics CSV into an (n_frames, 28) float64 array.

    ``column_map`` adapts differently ordered sources: entry i names the
    source column holding canonical column i (must be a permutation of 0..27).
    """
    text = _decode(data)
    rows: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f for f in line.split(",")]
        if not rows and lineno == 1:
            try:
                float(fields[0])
            except ValueError:
                continue  # header
        if len(fields) != KINEMATIC_DIMENSIONS:
            raise ParseError(
                f"expected {KINEMATIC_DIMENSIONS} columns, found {len(fields)}", lineno
            )
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise ParseError("non-numeric field", lineno) from None
        if not all(np.isfinite(values)):
            raise ParseError("non-finite value", lineno)
        rows.append(values)
    if not rows:
        raise ParseError("no kinematic records found")
    out = np.array(rows, dtype=np.float64)
    if column_map is not None:
        if sorted(column_map) != list(range(KINEMATIC_DIMENSIONS)):
            raise PegevalError("column_map must be a permutation of 0..27")
        out = out[:, column_map]
    return out


def emit_kinematics(frames: np.ndarray) -> str:
    """Canonical headerless CSV; float repr is shortest round-trip form."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != KINEMATIC_DIMENSIONS:
        raise PegevalError(f"kinematics must be (n, {KINEMATIC_DIMENSIONS})")
    lines = [",".join(repr(float(v)) for v in row) for row in arr]
    return "\n".join(lines) + "\n"


def _palette_codes() -> np.ndarray:
    return np.array([(r << 16) | (g << 8) | b for r, g, b in MASK_PALETTE], dtype=np.int64)


def parse_mask(data: bytes, strict: bool = True) -> SegmentationMask:
    """Decode an RGB raster into a class-index mask.

    In strict mode any off-palette pixel raises PaletteError citing its
    (x, y) coordinates; in lenient mode off-palette pixels map to background
    and are counted in ``off_palette_count``.
    """
    with Image.open(io.BytesIO(data)) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.int64)
    codes = (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]
    palette = _palette_codes()
    class_map = np.zeros(codes.shape, dtype=np.uint8)
    matched = np.zeros(codes.shape, dtype=bool)
    for cls, code in enumerate(palette):
        sel = codes == code
        class_map[sel] = cls
        matched |= sel
    off = ~matched
    off_count = int(off.sum())
    if off_count and strict:
        ys, xs = np.nonzero(off)
        y, x = int(ys[0]), int(xs[0])
        raise PaletteError(
            f"off-palette pixel #{codes[y, x]:06X} at (x={x}, y={y})"
        )
    return SegmentationMask(class_map, off_palette_count=off_count)


def emit_mask(mask: SegmentationMask, format: str = "PNG") -> bytes:
    """Encode a class-index mask as a lossless RGB raster."""
    fmt = format.upper()
    if fmt not in LOSSLESS_FORMATS:
        raise PegevalError(
            f"{format!r} is not a supported lossless format {LOSSLESS_FORMATS}"
        )
    palette = np.array(MASK_PALETTE, dtype=np.uint8)
    rgb = palette[mask.class_map]
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format=fmt)
    return buf.getvalue()
