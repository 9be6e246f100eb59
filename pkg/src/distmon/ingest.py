"""Detection stream wire format: JSON Lines in, validated frames out.

One line per frame:

    {"frame": 0, "t": 0.0, "detections": [
        {"label": "person", "score": 0.93, "bbox": [x1, y1, x2, y2]}]}

Frames carry monotonically increasing indices; timestamps are seconds.
The reader never buffers more than one line, so arbitrarily long streams
run in constant memory.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import DistmonError

log = logging.getLogger(__name__)


class IngestError(DistmonError):
    """Base class for wire-format failures."""


class MalformedLine(IngestError):
    """A line is not valid JSON or not a frame object."""


class SchemaViolation(IngestError):
    """A frame object parsed but a field is missing, mistyped, or out of range."""


@dataclass(frozen=True)
class Detection:
    """One detector output box in pixel coordinates, corners (x1,y1)-(x2,y2)."""

    label: str
    score: float
    bbox: tuple[float, float, float, float]


@dataclass(frozen=True)
class Frame:
    """One timestamped batch of detections."""

    frame: int
    t: float
    detections: tuple[Detection, ...]


def _require_number(obj, name: str) -> float:
    # bool is an int subclass; JSON true/false must not pass as numbers
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise SchemaViolation(f"{name} must be a number, got {type(obj).__name__}")
    val = float(obj)
    if not math.isfinite(val):
        raise SchemaViolation(f"{name} must be finite, got {obj!r}")
    return val


def _parse_detection(obj, index: int) -> Detection:
    if not isinstance(obj, dict):
        raise SchemaViolation(f"detections[{index}] must be an object")
    try:
        label = obj["label"]
        score = obj["score"]
        bbox = obj["bbox"]
    except KeyError as exc:
        raise SchemaViolation(f"detections[{index}] missing field {exc.args[0]!r}") from exc
    if not isinstance(label, str):
        raise SchemaViolation(f"detections[{index}].label must be a string")
    score_f = _require_number(score, f"detections[{index}].score")
    if not (0.0 <= score_f <= 1.0):
        raise SchemaViolation(f"detections[{index}].score must lie in [0, 1], got {score_f}")
    if not isinstance(bbox, list) or len(bbox) != 4:
        raise SchemaViolation(f"detections[{index}].bbox must be a 4-element array")
    x1, y1, x2, y2 = (_require_number(v, f"detections[{index}].bbox[{k}]") for k, v in enumerate(bbox))
    if x2 < x1 or y2 < y1:
        raise SchemaViolation(
            f"detections[{index}].bbox corners out of order: ({x1}, {y1}) vs ({x2}, {y2})"
        )
    return Detection(label=label, score=score_f, bbox=(x1, y1, x2, y2))


def parse_frame(line: str) -> Frame:
    """Parse one wire line into a Frame; raises on any schema violation."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedLine(f"frame must be a JSON object, got {type(obj).__name__}")
    try:
        frame_no = obj["frame"]
        t = obj["t"]
        dets = obj["detections"]
    except KeyError as exc:
        raise SchemaViolation(f"frame missing field {exc.args[0]!r}") from exc
    if isinstance(frame_no, bool) or not isinstance(frame_no, int):
        raise SchemaViolation(f"frame index must be an integer, got {frame_no!r}")
    if frame_no < 0:
        raise SchemaViolation(f"frame index must be >= 0, got {frame_no}")
    t_f = _require_number(t, "t")
    if not isinstance(dets, list):
        raise SchemaViolation("detections must be an array")
    parsed = tuple(_parse_detection(d, i) for i, d in enumerate(dets))
    return Frame(frame=frame_no, t=t_f, detections=parsed)


def serialize_frame(frame: Frame) -> str:
    """Inverse of parse_frame: one compact JSON line, no trailing newline."""
    obj = {
        "frame": frame.frame,
        "t": frame.t,
        "detections": [
            {"label": d.label, "score": d.score, "bbox": list(d.bbox)}
            for d in frame.detections
        ],
    }
    return json.dumps(obj, separators=(",", ":"))


def pixel_pose(det: Detection) -> tuple[float, float]:
    """Ground contact point of a box: bottom-edge midpoint.

    A standing person's feet sit at the middle of the box's lower edge,
    which is the only pixel of the box that lies on the ground plane.
    """
    x1, y1, x2, y2 = det.bbox
    return ((x1 + x2) / 2.0, y2)


def filter_persons(frame: Frame, score_threshold: float) -> tuple[Detection, ...]:
    """Keep detections labeled 'person' with score >= threshold."""
    return tuple(
        d for d in frame.detections
        if d.label == "person" and d.score >= score_threshold
    )


@dataclass
class ParseStats:
    """Counters for a lenient read; totals include rejected lines."""

    lines: int = 0
    frames: int = 0
    rejected: int = 0
    first_errors: list[str] = field(default_factory=list)

    def note_error(self, line_no: int, exc: Exception, keep: int = 5) -> None:
        self.rejected += 1
        if len(self.first_errors) < keep:
            self.first_errors.append(f"line {line_no}: {exc}")


def read_frames(
    lines: Iterable[str],
    strict: bool = True,
    stats: ParseStats | None = None,
) -> Iterator[Frame]:
    """Yield frames from an iterable of wire lines.

    Strict mode re-raises the first failure with its line number.  Lenient
    mode skips bad lines, tallying them in `stats` (when given) and
    logging the first few.  Blank lines are ignored in both modes.
    """
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stats is not None:
            stats.lines += 1
        try:
            frame = parse_frame(stripped)
        except IngestError as exc:
            if strict:
                raise type(exc)(f"line {line_no}: {exc}") from exc
            if stats is not None:
                stats.note_error(line_no, exc)
            log.debug("skipping line %d: %s", line_no, exc)
            continue
        if stats is not None:
            stats.frames += 1
        yield frame


def read_frames_file(fp: IO[str], strict: bool = True, stats: ParseStats | None = None) -> Iterator[Frame]:
    """read_frames over an open text stream."""
    return read_frames(fp, strict=strict, stats=stats)
