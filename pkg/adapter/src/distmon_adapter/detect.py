"""Video sources in, detection records out.

A detector sees every frame through observe() so temporal state (the
background model) stays fresh, and produces boxes through detect() only
on the frames that are actually emitted.  detect_stream() drives one
video source through a detector and yields wire records; no pixel data
survives past the frame being processed.
"""
from __future__ import annotations

import contextlib
import logging
import sys
from typing import Iterator

import cv2
import numpy as np

from .config import AdapterConfig, ModelLoadError, SourceUnavailable

log = logging.getLogger(__name__)

DEFAULT_FPS = 25.0

# COCO class index for person in torchvision detection models
_COCO_PERSON = 1


class Detector:
    """Interface: observe() every frame, detect() only emitted frames."""

    def observe(self, frame: np.ndarray) -> None:  # noqa: B027 - default no-op
        """Update temporal state; called once per source frame."""

    def detect(self, frame: np.ndarray) -> list[dict]:
        """Return detection dicts (label, score, bbox) for one frame."""
        raise NotImplementedError


class MotionDetector(Detector):
    """Background-subtraction detector: moving blobs become person boxes.

    Needs no pretrained weights, so it runs anywhere.  The first few
    frames only train the background model (a fresh model marks the
    whole first frame as foreground); until then detect() returns no
    boxes.  A box's score is the fraction of its area the foreground
    mask fills, which is 1.0 for a solid moving object and small for
    speckle.
    """

    def __init__(self, score_floor: float = 0.0, warmup: int = 5, min_area: float = 20.0):
        self.score_floor = score_floor
        self.warmup = warmup
        self.min_area = min_area
        self._seen = 0
        self._subtractor = cv2.createBackgroundSubtractorMOG2(
            history=100, detectShadows=False
        )
        self._mask: np.ndarray | None = None

    def observe(self, frame: np.ndarray) -> None:
        self._mask = self._subtractor.apply(frame)
        self._seen += 1

    def detect(self, frame: np.ndarray) -> list[dict]:
        if self._mask is None or self._seen <= self.warmup:
            return []
        _, binary = cv2.threshold(self._mask, 127, 255, cv2.THRESH_BINARY)
        contours, _ = cv2.findContours(binary, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
        detections = []
        for contour in contours:
            if cv2.contourArea(contour) < self.min_area:
                continue
            x, y, w, h = cv2.boundingRect(contour)
            filled = int(np.count_nonzero(binary[y:y + h, x:x + w]))
            score = min(1.0, max(0.0, filled / float(w * h)))
            if score < self.score_floor:
                continue
            detections.append({
                "label": "person",
                "score": score,
                "bbox": [float(x), float(y), float(x + w), float(y + h)],
            })
        return detections


class TorchvisionDetector(Detector):
    """Pretrained torchvision detection model restricted to persons."""

    def __init__(self, model_name: str, score_floor: float = 0.0):
        self.score_floor = score_floor
        try:
            import torch
            from torchvision.models import detection as tv_detection
        except ImportError as exc:
            raise ModelLoadError(
                f"model {model_name!r} needs torch and torchvision installed"
            ) from exc
        builders = {
            "faster-rcnn": tv_detection.fasterrcnn_resnet50_fpn,
            "ssdlite": tv_detection.ssdlite320_mobilenet_v3_large,
        }
        try:
            # weight download chatter must not leak into the data stream
            with contextlib.redirect_stdout(sys.stderr):
                model = builders[model_name](weights="DEFAULT")
        except Exception as exc:
            raise ModelLoadError(f"could not load weights for {model_name!r}: {exc}") from exc
        model.eval()
        self._torch = torch
        self._model = model

    def detect(self, frame: np.ndarray) -> list[dict]:
        rgb = cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
        tensor = self._torch.from_numpy(rgb).permute(2, 0, 1).to(self._torch.float32) / 255.0
        with self._torch.inference_mode():
            output = self._model([tensor])[0]
        detections = []
        for box, label, score in zip(
            output["boxes"].tolist(), output["labels"].tolist(), output["scores"].tolist()
        ):
            if int(label) != _COCO_PERSON:
                continue
            score = min(1.0, max(0.0, float(score)))
            if score < self.score_floor:
                continue
            x1, y1, x2, y2 = (float(v) for v in box)
            detections.append({
                "label": "person",
                "score": score,
                "bbox": [x1, y1, x2, y2],
            })
        return detections


def build_detector(model_name: str, score_floor: float = 0.0) -> Detector:
    """Construct the detector a preset names; unknown names fail to load."""
    if model_name == "motion":
        return MotionDetector(score_floor=score_floor)
    if model_name in ("faster-rcnn", "ssdlite"):
        return TorchvisionDetector(model_name, score_floor=score_floor)
    raise ModelLoadError(f"unknown model {model_name!r}; choose motion, faster-rcnn, or ssdlite")


def _open_source(source: str | int) -> cv2.VideoCapture:
    capture = cv2.VideoCapture(source)
    if not capture.isOpened():
        capture.release()
        raise SourceUnavailable(f"cannot open video source {source!r}")
    return capture


def _source_fps(capture: cv2.VideoCapture, cfg: AdapterConfig) -> float:
    if cfg.fps is not None:
        return cfg.fps
    fps = capture.get(cv2.CAP_PROP_FPS)
    if fps and fps > 0 and np.isfinite(fps):
        return float(fps)
    log.warning("source reports no frame rate; assuming %.1f fps", DEFAULT_FPS)
    return DEFAULT_FPS


def detect_stream(cfg: AdapterConfig) -> Iterator[dict]:
    """Run a detector over a video source, yielding one record per
    emitted frame.

    Every source frame updates the detector; every frame_stride-th one
    is emitted, so a source of N frames yields N // frame_stride
    records.  Timestamps are the source frame index over the frame
    rate.  Frames are discarded as soon as they are processed.
    """
    detector = build_detector(cfg.model_name, cfg.score_floor)
    capture = _open_source(cfg.source)
    try:
        fps = _source_fps(capture, cfg)
        index = 0
        while True:
            ok, frame = capture.read()
            if not ok:
                break
            detector.observe(frame)
            if (index + 1) % cfg.frame_stride == 0:
                yield {
                    "frame": index,
                    "t": index / fps,
                    "detections": detector.detect(frame),
                }
            index += 1
    finally:
        capture.release()
