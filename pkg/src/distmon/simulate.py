"""Synthetic crowd generator: known world positions, wire-format output.

Agents follow a random-waypoint walk inside the ROI; each frame their
positions are projected to pixels, jittered with Gaussian noise, and
wrapped in detection boxes whose bottom-center is the projected point.
Because the true world positions are known, the stream doubles as a
ground-truth oracle for the measurement pipeline.

All randomness flows through one numpy Generator seeded from the
config, so a given config always produces a byte-identical stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DistmonError
from .geometry import Homography, WorldPoint, world_to_image_many
from .ingest import Detection, Frame
from .scene import ParseError, RoiPolygon, ValidationError, contains_many, \
    parse_config, homography_from_config, roi_from_text

W_CUTOFF = 1e-12


class SimError(DistmonError):
    """Base class for simulator failures."""


class ProjectionSingular(SimError):
    """An agent's position maps to infinity under the calibration."""


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a synthetic stream.

    Two equal configs produce byte-identical streams; the generator is
    numpy's default PCG64 seeded with `seed`.
    """

    seed: int
    agent_count: int
    roi: RoiPolygon
    homography: Homography
    speed_range: tuple[float, float] = (0.5, 1.5)
    frame_rate: float = 10.0
    duration: float = 10.0
    bbox_width_px: float = 40.0
    bbox_height_px: float = 100.0
    pixel_noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.agent_count < 0:
            raise ValidationError(f"agent_count must be >= 0, got {self.agent_count}")
        if not (self.frame_rate > 0):
            raise ValidationError(f"frame_rate must be > 0, got {self.frame_rate}")
        if not (self.pixel_noise_sigma >= 0):
            raise ValidationError(
                f"pixel_noise_sigma must be >= 0, got {self.pixel_noise_sigma}"
            )
        lo, hi = self.speed_range
        if not (0 <= lo <= hi):
            raise ValidationError(f"speed_range must satisfy 0 <= lo <= hi, got {self.speed_range}")
        if not (self.duration >= 0):
            raise ValidationError(f"duration must be >= 0, got {self.duration}")
        if not (self.bbox_width_px > 0 and self.bbox_height_px > 0):
            raise ValidationError("bbox dimensions must be > 0")

    @property
    def frame_count(self) -> int:
        return int(round(self.duration * self.frame_rate))


@dataclass(frozen=True)
class SimFrameTruth:
    """One emitted frame together with the positions that produced it."""

    frame: int
    positions: tuple[WorldPoint, ...]
    emitted: Frame


@dataclass
class SimState:
    """Mutable walk state: where agents are, where they are headed."""

    positions: np.ndarray
    waypoints: np.ndarray
    speeds: np.ndarray
    rng: np.random.Generator


def _sample_in_roi(roi: RoiPolygon, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform points inside the ROI by rejection from its bounding box."""
    if count == 0:
        return np.zeros((0, 2), dtype=float)
    arr = roi.as_array
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    out = np.zeros((count, 2), dtype=float)
    need = np.arange(count)
    while len(need):
        cand = rng.uniform(lo, hi, size=(len(need), 2))
        ok = contains_many(roi, cand)
        out[need[ok]] = cand[ok]
        need = need[~ok]
    return out


def init_state(cfg: SimConfig) -> SimState:
    rng = np.random.default_rng(cfg.seed)
    positions = _sample_in_roi(cfg.roi, rng, cfg.agent_count)
    waypoints = _sample_in_roi(cfg.roi, rng, cfg.agent_count)
    speeds = rng.uniform(cfg.speed_range[0], cfg.speed_range[1], size=cfg.agent_count)
    return SimState(positions=positions, waypoints=waypoints, speeds=speeds, rng=rng)


def step(state: SimState, cfg: SimConfig, dt: float) -> SimState:
    """Advance every agent one tick toward its waypoint.

    Agents that would leave the ROI (possible when it is non-convex)
    stay put for the tick and redraw their waypoint, so positions remain
    inside the ROI and no displacement exceeds speed * dt.
    """
    n = len(state.positions)
    if n == 0 or dt == 0.0:
        return state
    pos = state.positions
    way = state.waypoints
    delta = way - pos
    dist = np.hypot(delta[:, 0], delta[:, 1])
    reach = state.speeds * dt
    arrived = dist <= reach
    new_pos = pos.copy()
    moving = ~arrived & (dist > 0)
    if moving.any():
        frac = (reach[moving] / dist[moving])[:, None]
        new_pos[moving] = pos[moving] + delta[moving] * frac
    new_pos[arrived] = way[arrived]
    inside = contains_many(cfg.roi, new_pos)
    stuck = ~inside
    if stuck.any():
        new_pos[stuck] = pos[stuck]
    redraw = arrived | stuck
    if redraw.any():
        way = way.copy()
        way[redraw] = _sample_in_roi(cfg.roi, state.rng, int(redraw.sum()))
    state.positions = new_pos
    state.waypoints = way
    return state


def render_detections(state: SimState, cfg: SimConfig, frame_index: int) -> SimFrameTruth:
    """Project agents to pixels and wrap them in person boxes.

    The box is placed so its bottom-edge midpoint lands on the projected
    (and noise-shifted) ground contact pixel; score is 1.0.
    """
    n = len(state.positions)
    t = frame_index / cfg.frame_rate
    if n == 0:
        return SimFrameTruth(
            frame=frame_index,
            positions=(),
            emitted=Frame(frame=frame_index, t=t, detections=()),
        )
    px, ok = world_to_image_many(cfg.homography, state.positions)
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise ProjectionSingular(
            f"agent {bad} at {tuple(state.positions[bad])} projects to infinity"
        )
    noise = state.rng.normal(0.0, cfg.pixel_noise_sigma, size=(n, 2))
    feet = px + noise
    half_w = cfg.bbox_width_px / 2.0
    dets = []
    for i in range(n):
        bx, by = float(feet[i, 0]), float(feet[i, 1])
        dets.append(
            Detection(
                label="person",
                score=1.0,
                bbox=(bx - half_w, by - cfg.bbox_height_px, bx + half_w, by),
            )
        )
    positions = tuple(
        WorldPoint(float(x), float(y)) for x, y in state.positions
    )
    return SimFrameTruth(
        frame=frame_index,
        positions=positions,
        emitted=Frame(frame=frame_index, t=t, detections=tuple(dets)),
    )


def simulate_stream(cfg: SimConfig) -> Iterator[SimFrameTruth]:
    """Yield frame_count truth-annotated frames, stepping between them."""
    state = init_state(cfg)
    dt = 1.0 / cfg.frame_rate
    for idx in range(cfg.frame_count):
        yield render_detections(state, cfg, idx)
        state = step(state, cfg, dt)


def load_sim_config(text: str, seed: int) -> SimConfig:
    """Build a SimConfig from a scene INI with a [simulate] section.

    The scene's homography and ROI are reused; [simulate] adds the crowd
    parameters.  All fields default sensibly so a plain scene config
    simulates out of the box.
    """
    cp = parse_config(text)
    homography = homography_from_config(cp)
    raw_vertices = cp.get("roi", "vertices", fallback=None)
    if not raw_vertices:
        raise ParseError("missing field 'vertices' in section [roi]")
    roi = roi_from_text(raw_vertices)

    def fval(option, default):
        try:
            return cp.getfloat("simulate", option, fallback=default)
        except ValueError as exc:
            raise ParseError(f"field '{option}' in [simulate] is not a number") from exc

    try:
        agent_count = cp.getint("simulate", "agent_count", fallback=20)
    except ValueError as exc:
        raise ParseError("field 'agent_count' in [simulate] is not an integer") from exc
    return SimConfig(
        seed=seed,
        agent_count=agent_count,
        roi=roi,
        homography=homography,
        speed_range=(fval("speed_min", 0.5), fval("speed_max", 1.5)),
        frame_rate=fval("frame_rate", 10.0),
        duration=fval("duration", 10.0),
        bbox_width_px=fval("bbox_width_px", 40.0),
        bbox_height_px=fval("bbox_height_px", 100.0),
        pixel_noise_sigma=fval("pixel_noise_sigma", 0.0),
    )
