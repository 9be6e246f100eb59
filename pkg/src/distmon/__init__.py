"""Pedestrian distancing monitor.

Maps per-frame pedestrian detections into ground-plane positions
through a calibrated homography, flags pairs closer than a minimum
distance, tracks crowd density, and estimates the critical density at
which violations become statistically expected.
"""
from .errors import DistmonError
from .geometry import (
    Correspondence,
    DegenerateConfiguration,
    Homography,
    ImagePoint,
    PointAtInfinity,
    WorldPoint,
    estimate_homography,
    image_to_world,
    world_to_image,
)
from .scene import RoiPolygon, SceneConfig, load_scene, polygon_area
from .ingest import Detection, Frame, parse_frame, read_frames, serialize_frame
from .monitor import (
    FitAccumulator,
    FrameAssessment,
    MonitorEngine,
    OutOfOrderFrame,
    assess_frame,
    count_violations,
    pairwise_distances,
)
from .density import (
    CriticalDensity,
    RegressionFit,
    critical_density,
    fit_ols,
    fit_report,
    prediction_band,
    skewness,
    t_quantile,
)
from .simulate import SimConfig, simulate_stream
from .report import Hist2D, hist2d, write_report

__version__ = "0.1.0"

__all__ = [
    "DistmonError",
    "Correspondence",
    "DegenerateConfiguration",
    "Homography",
    "ImagePoint",
    "PointAtInfinity",
    "WorldPoint",
    "estimate_homography",
    "image_to_world",
    "world_to_image",
    "RoiPolygon",
    "SceneConfig",
    "load_scene",
    "polygon_area",
    "Detection",
    "Frame",
    "parse_frame",
    "read_frames",
    "serialize_frame",
    "FitAccumulator",
    "FrameAssessment",
    "MonitorEngine",
    "OutOfOrderFrame",
    "assess_frame",
    "count_violations",
    "pairwise_distances",
    "CriticalDensity",
    "RegressionFit",
    "critical_density",
    "fit_ols",
    "fit_report",
    "prediction_band",
    "skewness",
    "t_quantile",
    "SimConfig",
    "simulate_stream",
    "Hist2D",
    "hist2d",
    "write_report",
    "__version__",
]
