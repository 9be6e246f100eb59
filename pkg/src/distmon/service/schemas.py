"""Request/response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class PairModel(BaseModel):
    """One calibration correspondence: pixel point and its world point."""

    image: tuple[float, float]
    world: tuple[float, float]


class CalibrateRequest(BaseModel):
    pairs: list[PairModel] = Field(min_length=4)


class CalibrateResponse(BaseModel):
    direction: str
    matrix: list[float] = Field(min_length=9, max_length=9)


class SceneModel(BaseModel):
    """Structured scene description mirroring the config file fields."""

    matrix: list[float] = Field(min_length=9, max_length=9)
    direction: str = "world_to_image"
    roi_vertices: list[tuple[float, float]] = Field(min_length=3)
    d_c: float = 2.0
    u0: float = 0.05
    score_threshold: float = 0.5
    a0: float | None = None


class DetectionModel(BaseModel):
    label: str
    score: float = Field(ge=0.0, le=1.0)
    bbox: tuple[float, float, float, float]


class FrameModel(BaseModel):
    frame: int = Field(ge=0)
    t: float
    detections: list[DetectionModel] = Field(default_factory=list)


class SessionCreateRequest(BaseModel):
    scene: SceneModel
    rho_c: float | None = Field(default=None, ge=0.0)


class SessionCreateResponse(BaseModel):
    session_id: str


class FramesRequest(BaseModel):
    frames: list[FrameModel] = Field(min_length=1)


class AssessmentModel(BaseModel):
    """One frame's verdict; absent distances are omitted from the body."""

    frame: int
    t: float
    n: int
    rho: float
    v: int
    pair_violations: int
    d_min: float | None = None
    d_avg: float | None = None
    c1: int
    c2: int


class FramesResponse(BaseModel):
    assessments: list[AssessmentModel]
    dropped_detections: int


class SessionStatusResponse(BaseModel):
    session_id: str
    frames_processed: int
    dropped_detections: int
    samples: int
    rho_c: float | None = None


class FitRequest(BaseModel):
    level: float | None = Field(default=None, gt=0.0, lt=1.0)


class FitReportModel(BaseModel):
    beta0: float
    beta1: float
    s: float
    n: int
    rho_mean: float
    s_xx: float
    r_squared: float
    rho_c: float
    level: float
    status: str


class DensityFitRequest(BaseModel):
    samples: list[tuple[float, float]] = Field(min_length=3)
    level: float = Field(default=0.95, gt=0.0, lt=1.0)


class SimulateRequest(BaseModel):
    scene: SceneModel
    seed: int = 0
    agent_count: int = Field(default=20, ge=0)
    duration: float = Field(default=10.0, gt=0.0)
    frame_rate: float = Field(default=10.0, gt=0.0)
    speed_min: float = Field(default=0.5, ge=0.0)
    speed_max: float = Field(default=1.5, ge=0.0)
    pixel_noise_sigma: float = Field(default=0.0, ge=0.0)
    include_truth: bool = False


class TruthFrameModel(BaseModel):
    frame: int
    positions: list[tuple[float, float]]


class SimulateResponse(BaseModel):
    frames: list[FrameModel]
    truth: list[TruthFrameModel] | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
