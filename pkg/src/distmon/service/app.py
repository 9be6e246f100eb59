"""HTTP facade over the monitoring core.

Sessions wrap a streaming engine plus a fit accumulator behind an id;
frames posted to a session come back assessed, and the collected
(density, violations) samples can be fitted on demand.  Stateless
helpers cover calibration, fitting externally collected samples, and
synthetic stream generation.

State lives in process memory only; restarting the service forgets all
sessions, which is the intended retention story.
"""
from __future__ import annotations

import threading
import uuid

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..density import critical_density, fit_ols, fit_report
from ..errors import DistmonError
from ..geometry import Correspondence, Homography, ImagePoint, WorldPoint, \
    estimate_homography
from ..ingest import Detection, Frame
from ..monitor import FitAccumulator, MonitorEngine, OutOfOrderFrame
from ..scene import DIRECTION_IMAGE_TO_WORLD, DIRECTION_WORLD_TO_IMAGE, \
    ParseError, RoiPolygon, SceneConfig
from ..simulate import SimConfig, simulate_stream
from .schemas import (
    AssessmentModel,
    CalibrateRequest,
    CalibrateResponse,
    DensityFitRequest,
    FitReportModel,
    FitRequest,
    FrameModel,
    FramesRequest,
    FramesResponse,
    HealthResponse,
    SceneModel,
    SessionCreateRequest,
    SessionCreateResponse,
    SessionStatusResponse,
    SimulateRequest,
    SimulateResponse,
    TruthFrameModel,
)

# Simulation responses are inline JSON; keep them bounded.
MAX_SIM_FRAMES = 20_000


class UnknownSession(DistmonError):
    """No session with the requested id."""


class _Session:
    def __init__(self, engine: MonitorEngine):
        self.engine = engine
        self.accumulator = FitAccumulator()
        self.lock = threading.Lock()


class _SessionStore:
    def __init__(self):
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def create(self, engine: MonitorEngine) -> str:
        session_id = uuid.uuid4().hex
        with self._lock:
            self._sessions[session_id] = _Session(engine)
        return session_id

    def get(self, session_id: str) -> _Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def drop(self, session_id: str) -> None:
        with self._lock:
            if self._sessions.pop(session_id, None) is None:
                raise UnknownSession(f"no session {session_id!r}")


def _scene_from_model(model: SceneModel) -> SceneConfig:
    if model.direction not in (DIRECTION_WORLD_TO_IMAGE, DIRECTION_IMAGE_TO_WORLD):
        raise ParseError(f"unknown homography direction {model.direction!r}")
    h = Homography.from_flat(model.matrix)
    if model.direction == DIRECTION_IMAGE_TO_WORLD:
        h = Homography(np.array(h.m_inv))
    roi = RoiPolygon(tuple(WorldPoint(x, y) for x, y in model.roi_vertices))
    return SceneConfig(
        homography=h,
        roi=roi,
        min_distance_dc=model.d_c,
        violation_budget_u0=model.u0,
        score_threshold=model.score_threshold,
        area_a0=model.a0,
    )


def _frame_from_model(model: FrameModel) -> Frame:
    return Frame(
        frame=model.frame,
        t=model.t,
        detections=tuple(
            Detection(label=d.label, score=d.score, bbox=d.bbox)
            for d in model.detections
        ),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="distmon", version=__version__)
    store = _SessionStore()

    @app.exception_handler(UnknownSession)
    async def _unknown_session(request: Request, exc: UnknownSession):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(OutOfOrderFrame)
    async def _out_of_order(request: Request, exc: OutOfOrderFrame):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(DistmonError)
    async def _domain_error(request: Request, exc: DistmonError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/calibrate", response_model=CalibrateResponse)
    def calibrate(req: CalibrateRequest) -> CalibrateResponse:
        pairs = [
            Correspondence(
                image=ImagePoint(*p.image), world=WorldPoint(*p.world)
            )
            for p in req.pairs
        ]
        h = estimate_homography(pairs)
        return CalibrateResponse(
            direction=DIRECTION_WORLD_TO_IMAGE, matrix=h.flat()
        )

    @app.post("/sessions", response_model=SessionCreateResponse, status_code=201)
    def create_session(req: SessionCreateRequest) -> SessionCreateResponse:
        scene = _scene_from_model(req.scene)
        engine = MonitorEngine(scene, rho_c=req.rho_c)
        return SessionCreateResponse(session_id=store.create(engine))

    @app.get("/sessions/{session_id}", response_model=SessionStatusResponse)
    def session_status(session_id: str) -> SessionStatusResponse:
        session = store.get(session_id)
        with session.lock:
            return SessionStatusResponse(
                session_id=session_id,
                frames_processed=session.engine.frames_processed,
                dropped_detections=session.engine.dropped_detections,
                samples=len(session.accumulator),
                rho_c=session.engine.rho_c,
            )

    @app.post(
        "/sessions/{session_id}/frames",
        response_model=FramesResponse,
        response_model_exclude_none=True,
    )
    def post_frames(session_id: str, req: FramesRequest) -> FramesResponse:
        session = store.get(session_id)
        out = []
        with session.lock:
            dropped_before = session.engine.dropped_detections
            for frame_model in req.frames:
                assessment = session.engine.process(_frame_from_model(frame_model))
                session.accumulator.add(assessment)
                out.append(AssessmentModel(**assessment.to_record()))
            dropped = session.engine.dropped_detections - dropped_before
        return FramesResponse(assessments=out, dropped_detections=dropped)

    @app.post("/sessions/{session_id}/fit", response_model=FitReportModel)
    def fit_session(session_id: str, req: FitRequest) -> FitReportModel:
        session = store.get(session_id)
        with session.lock:
            # fit on a snapshot so monitoring can continue concurrently
            samples = list(zip(session.accumulator.rho, session.accumulator.v))
            u0 = session.engine.scene.violation_budget_u0
        level = req.level if req.level is not None else 1.0 - u0
        fit = fit_ols(samples)
        crit = critical_density(fit, level=level)
        return FitReportModel(**fit_report(crit))

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> None:
        store.drop(session_id)

    @app.post("/density/fit", response_model=FitReportModel)
    def fit_samples(req: DensityFitRequest) -> FitReportModel:
        fit = fit_ols(req.samples)
        crit = critical_density(fit, level=req.level)
        return FitReportModel(**fit_report(crit))

    @app.post(
        "/simulate",
        response_model=SimulateResponse,
        response_model_exclude_none=True,
    )
    def simulate(req: SimulateRequest) -> SimulateResponse:
        scene = _scene_from_model(req.scene)
        cfg = SimConfig(
            seed=req.seed,
            agent_count=req.agent_count,
            roi=scene.roi,
            homography=scene.homography,
            speed_range=(req.speed_min, req.speed_max),
            frame_rate=req.frame_rate,
            duration=req.duration,
            pixel_noise_sigma=req.pixel_noise_sigma,
        )
        if cfg.frame_count > MAX_SIM_FRAMES:
            raise ParseError(
                f"simulation would emit {cfg.frame_count} frames; "
                f"limit is {MAX_SIM_FRAMES}"
            )
        frames = []
        truth = [] if req.include_truth else None
        for item in simulate_stream(cfg):
            frames.append(
                FrameModel(
                    frame=item.emitted.frame,
                    t=item.emitted.t,
                    detections=[
                        {"label": d.label, "score": d.score, "bbox": d.bbox}
                        for d in item.emitted.detections
                    ],
                )
            )
            if truth is not None:
                truth.append(
                    TruthFrameModel(
                        frame=item.frame,
                        positions=[(p.x, p.y) for p in item.positions],
                    )
                )
        return SimulateResponse(frames=frames, truth=truth)

    return app
