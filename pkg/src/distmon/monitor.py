"""Per-frame distancing assessment: localization, distances, signals.

The pipeline for one frame is fixed:

1. keep person detections at or above the score threshold,
2. project each box's bottom-center pixel to the ground plane,
3. keep pedestrians inside the ROI (boundary inclusive),
4. count ordered pairs closer than d_c and take distance statistics,
5. raise the proximity / density control signals.

Distances are computed element-wise (difference, square, sum, square
root) so results are reproducible bit for bit across vectorized and
scalar implementations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DistmonError
from .geometry import image_to_world_many
from .ingest import Detection, Frame, filter_persons, pixel_pose
from .scene import SceneConfig, contains_many


class MonitorError(DistmonError):
    """Base class for assessment failures."""


class OutOfOrderFrame(MonitorError):
    """Frame indices fed to an engine must be strictly increasing."""


@dataclass(frozen=True)
class FrameAssessment:
    """Everything the monitor concluded about one frame.

    d_min and d_avg are None when fewer than two pedestrians are in the
    ROI; a distance of 0 would be a lie there, not a neutral value.
    """

    frame: int
    t: float
    n: int
    rho: float
    v: int
    pair_violations: int
    d_min: float | None
    d_avg: float | None
    c1: int
    c2: int

    def to_record(self) -> dict:
        """JSON-ready dict; absent distances are omitted, not nulled."""
        rec = {
            "frame": self.frame,
            "t": self.t,
            "n": self.n,
            "rho": self.rho,
            "v": self.v,
            "pair_violations": self.pair_violations,
        }
        if self.d_min is not None:
            rec["d_min"] = self.d_min
        if self.d_avg is not None:
            rec["d_avg"] = self.d_avg
        rec["c1"] = self.c1
        rec["c2"] = self.c2
        return rec


def localize_pedestrians(
    frame: Frame, scene: SceneConfig
) -> tuple[np.ndarray, int]:
    """World positions of in-ROI pedestrians, plus the dropped count.

    Dropped means: projection failed (point at infinity under the
    calibration) or landed outside the ROI.  Detections below the score
    threshold or with other labels are filtered, not counted as dropped.
    """
    persons = filter_persons(frame, scene.score_threshold)
    if not persons:
        return np.zeros((0, 2), dtype=float), 0
    px = np.array([pixel_pose(d) for d in persons], dtype=float)
    world, ok = image_to_world_many(scene.homography, px)
    dropped = int((~ok).sum())
    world = world[ok]
    if len(world):
        mask = contains_many(scene.roi, world)
        dropped += int((~mask).sum())
        world = world[mask]
    return world, dropped


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    """Condensed distance vector in lexicographic (i < j) pair order."""
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    if n < 2:
        return np.zeros(0, dtype=float)
    iu, ju = np.triu_indices(n, k=1)
    dx = pos[iu, 0] - pos[ju, 0]
    dy = pos[iu, 1] - pos[ju, 1]
    return np.sqrt(dx * dx + dy * dy)


def _distance_matrix(pos: np.ndarray) -> np.ndarray:
    """Full n x n distance matrix with +inf on the diagonal."""
    dx = pos[:, 0:1] - pos[:, 0]
    dy = pos[:, 1:2] - pos[:, 1]
    dist = np.sqrt(dx * dx + dy * dy)
    np.fill_diagonal(dist, np.inf)
    return dist


def count_violations(positions: np.ndarray, d_c: float) -> int:
    """Ordered-pair violation count: |{(i, j), i != j : d_ij < d_c}|.

    Every unordered pair in violation is counted twice, once from each
    endpoint, so the result is always even.  The comparison is strict;
    a pair at exactly d_c is compliant.
    """
    pos = np.asarray(positions, dtype=float)
    if len(pos) < 2:
        return 0
    dist = _distance_matrix(pos)
    return int((dist < d_c).sum())


def frame_stats(
    positions: np.ndarray, d_c: float, area: float
) -> tuple[int, float, int, int, float | None, float | None]:
    """(n, rho, v, pair_violations, d_min, d_avg) for one frame's positions.

    rho is crowd density n / A0.  d_min is the smallest nearest-neighbor
    distance; d_avg averages each pedestrian's nearest-neighbor distance.
    """
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    rho = n / area
    if n < 2:
        return n, rho, 0, 0, None, None
    dist = _distance_matrix(pos)
    v = int((dist < d_c).sum())
    nearest = dist.min(axis=1)
    d_min = float(nearest.min())
    # fsum keeps the mean independent of summation order
    d_avg = math.fsum(float(x) for x in nearest) / n
    return n, rho, v, v // 2, d_min, d_avg


def control_signals(
    n: int, d_min: float | None, rho: float, d_c: float, rho_c: float | None
) -> tuple[int, int]:
    """(c1, c2): proximity alarm and density alarm.

    c1 fires when any pair is closer than d_c.  c2 fires when a critical
    density is configured and the frame's density exceeds it strictly.
    """
    c1 = 1 if (n >= 2 and d_min is not None and d_min < d_c) else 0
    c2 = 1 if (rho_c is not None and rho > rho_c) else 0
    return c1, c2


def assess_frame(
    frame: Frame, scene: SceneConfig, rho_c: float | None = None
) -> tuple[FrameAssessment, int]:
    """Full pipeline for one frame; returns (assessment, dropped count)."""
    positions, dropped = localize_pedestrians(frame, scene)
    n, rho, v, pairs, d_min, d_avg = frame_stats(
        positions, scene.min_distance_dc, scene.area
    )
    c1, c2 = control_signals(n, d_min, rho, scene.min_distance_dc, rho_c)
    return (
        FrameAssessment(
            frame=frame.frame,
            t=frame.t,
            n=n,
            rho=rho,
            v=v,
            pair_violations=pairs,
            d_min=d_min,
            d_avg=d_avg,
            c1=c1,
            c2=c2,
        ),
        dropped,
    )


@dataclass
class FitAccumulator:
    """Collects (density, violation count) samples for regression.

    Holds scalar pairs only; no frames, boxes, or positions are kept.
    """

    rho: list[float] = field(default_factory=list)
    v: list[int] = field(default_factory=list)

    def add(self, assessment: FrameAssessment) -> None:
        self.rho.append(assessment.rho)
        self.v.append(assessment.v)

    def __len__(self) -> int:
        return len(self.rho)


class MonitorEngine:
    """Streaming assessor with constant-size state.

    Feed frames in strictly increasing index order; each call returns the
    frame's assessment.  The engine remembers only the scene, the last
    frame index, and two counters, so memory use does not grow with the
    stream: no imagery, boxes, or trajectories are retained.
    """

    __slots__ = ("scene", "rho_c", "last_frame", "frames_processed", "dropped_detections")

    def __init__(self, scene: SceneConfig, rho_c: float | None = None):
        self.scene = scene
        self.rho_c = rho_c
        self.last_frame: int | None = None
        self.frames_processed = 0
        self.dropped_detections = 0

    def process(self, frame: Frame) -> FrameAssessment:
        if self.last_frame is not None and frame.frame <= self.last_frame:
            raise OutOfOrderFrame(
                f"frame {frame.frame} after frame {self.last_frame}"
            )
        assessment, dropped = assess_frame(frame, self.scene, self.rho_c)
        self.last_frame = frame.frame
        self.frames_processed += 1
        self.dropped_detections += dropped
        return assessment

    def process_stream(self, frames: Iterable[Frame]) -> Iterable[FrameAssessment]:
        for frame in frames:
            yield self.process(frame)

    def __getstate__(self):
        return (
            self.scene,
            self.rho_c,
            self.last_frame,
            self.frames_processed,
            self.dropped_detections,
        )

    def __setstate__(self, state):
        (
            self.scene,
            self.rho_c,
            self.last_frame,
            self.frames_processed,
            self.dropped_detections,
        ) = state
