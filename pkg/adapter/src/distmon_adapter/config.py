"""Adapter configuration and error types."""
from __future__ import annotations

import math
from dataclasses import dataclass


class AdapterError(Exception):
    """Base class for every error raised by the adapter."""


class SourceUnavailable(AdapterError):
    """The video source cannot be opened or read."""


class ModelLoadError(AdapterError):
    """The requested detector cannot be constructed (unknown name,
    missing dependency, or unavailable pretrained weights)."""


class MissingInput(AdapterError):
    """A required input file or directory is absent."""


@dataclass(frozen=True)
class AdapterConfig:
    """How to turn one video source into detection records.

    source is a file path or a camera index; model_name picks a detector
    preset; detections scoring below score_floor are not emitted;
    frame_stride emits every stride-th frame (record count is the frame
    count floor-divided by the stride).  fps overrides the source's
    frame-rate metadata when given.
    """

    source: str | int
    model_name: str = "faster-rcnn"
    score_floor: float = 0.0
    frame_stride: int = 1
    fps: float | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.frame_stride, int) or isinstance(self.frame_stride, bool):
            raise ValueError(f"frame_stride must be an integer, got {self.frame_stride!r}")
        if self.frame_stride < 1:
            raise ValueError(f"frame_stride must be >= 1, got {self.frame_stride}")
        if not (0.0 <= self.score_floor <= 1.0):
            raise ValueError(f"score_floor must lie in [0, 1], got {self.score_floor}")
        if self.fps is not None and not (math.isfinite(self.fps) and self.fps > 0):
            raise ValueError(f"fps must be finite and > 0, got {self.fps}")
