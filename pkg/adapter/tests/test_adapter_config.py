"""Configuration invariants and detector construction."""
from __future__ import annotations

import dataclasses

import pytest

from distmon_adapter import AdapterConfig, ModelLoadError, build_detector
from distmon_adapter.detect import MotionDetector


class TestAdapterConfig:
    def test_defaults(self):
        cfg = AdapterConfig(source="clip.avi")
        assert cfg.model_name == "faster-rcnn"
        assert cfg.score_floor == 0.0
        assert cfg.frame_stride == 1
        assert cfg.fps is None

    def test_camera_index_source(self):
        assert AdapterConfig(source=0).source == 0

    @pytest.mark.parametrize("stride", [0, -1, -100])
    def test_stride_must_be_positive(self, stride):
        with pytest.raises(ValueError, match="frame_stride"):
            AdapterConfig(source="x", frame_stride=stride)

    @pytest.mark.parametrize("stride", [1.5, True, "2"])
    def test_stride_must_be_an_integer(self, stride):
        with pytest.raises(ValueError, match="frame_stride"):
            AdapterConfig(source="x", frame_stride=stride)

    @pytest.mark.parametrize("floor", [-0.1, 1.1, float("nan")])
    def test_score_floor_outside_unit_interval(self, floor):
        with pytest.raises(ValueError, match="score_floor"):
            AdapterConfig(source="x", score_floor=floor)

    @pytest.mark.parametrize("floor", [0.0, 0.5, 1.0])
    def test_score_floor_bounds_accepted(self, floor):
        assert AdapterConfig(source="x", score_floor=floor).score_floor == floor

    @pytest.mark.parametrize("fps", [0.0, -25.0, float("inf"), float("nan")])
    def test_fps_must_be_positive_finite(self, fps):
        with pytest.raises(ValueError, match="fps"):
            AdapterConfig(source="x", fps=fps)

    def test_frozen(self):
        cfg = AdapterConfig(source="x")
        with pytest.raises(dataclasses.FrozenInstanceError):
            cfg.frame_stride = 2


class TestBuildDetector:
    def test_unknown_model_fails_to_load(self):
        with pytest.raises(ModelLoadError, match="nope"):
            build_detector("nope")

    def test_motion_preset(self):
        det = build_detector("motion", score_floor=0.25)
        assert isinstance(det, MotionDetector)
        assert det.score_floor == 0.25
