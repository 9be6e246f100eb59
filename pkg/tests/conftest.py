"""Shared fixtures: calibrations, ROIs, and scene configs."""
from __future__ import annotations

import numpy as np
import pytest

from distmon.geometry import Homography, WorldPoint
from distmon.scene import RoiPolygon, SceneConfig


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260822)


@pytest.fixture
def projective_h() -> Homography:
    """Non-affine calibration: ground rectangle seen as an image trapezoid.

    World (0,0)-(20,30) maps to a trapezoid with a vanishing direction,
    so the third row genuinely depends on position.
    """
    m = np.array([
        [27.0, 9.644, 100.0],
        [0.0, -3.23, 350.0],
        [0.0, 0.03958, 1.0],
    ])
    return Homography(m)


@pytest.fixture
def rect_roi() -> RoiPolygon:
    return RoiPolygon((
        WorldPoint(0.0, 0.0),
        WorldPoint(20.0, 0.0),
        WorldPoint(20.0, 30.0),
        WorldPoint(0.0, 30.0),
    ))


@pytest.fixture
def scene(projective_h, rect_roi) -> SceneConfig:
    return SceneConfig(homography=projective_h, roi=rect_roi)
