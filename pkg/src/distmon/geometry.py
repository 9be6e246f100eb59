"""Planar homography estimation and image <-> ground-plane mapping.

Coordinate conventions:
    Image frame: x = pixel column (rightward), y = pixel row (downward).
    World frame: bird's-eye-view ground plane (z = 0), units meters.

A homography and any nonzero scalar multiple of it describe the same
mapping, so matrices are stored normalized with the largest-magnitude
entry equal to 1.  The stored direction is always world -> image; the
inverse is computed once at construction and cached, never per point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DistmonError

# Homogeneous scale below this is treated as the horizon rather than roundoff.
W_CUTOFF = 1e-12
# Determinant magnitude below this (after normalization) means non-invertible.
DET_CUTOFF = 1e-12
# Relative singular-value floor for a unique DLT solution.
RANK_TOL = 1e-9


class GeometryError(DistmonError):
    """Base class for geometry failures."""


class DegenerateConfiguration(GeometryError):
    """The correspondences (or matrix) do not determine an invertible homography."""


class NonFiniteInput(GeometryError):
    """An input coordinate is NaN or infinite."""


class PointAtInfinity(GeometryError):
    """The mapped point lies on (or beyond) the horizon line."""


@dataclass(frozen=True)
class ImagePoint:
    """Pixel position: x column (rightward), y row (downward)."""

    x: float
    y: float


@dataclass(frozen=True)
class WorldPoint:
    """Ground-plane position in meters."""

    x: float
    y: float


@dataclass(frozen=True)
class Correspondence:
    """One measured image <-> world point pair used for calibration."""

    image: ImagePoint
    world: WorldPoint


class Homography:
    """Invertible 3x3 projective map stored in the world -> image direction.

    Immutable: both the matrix and its cached inverse are read-only arrays,
    so instances are safe to share across threads.
    """

    __slots__ = ("_m", "_m_inv")

    def __init__(self, m) -> None:
        arr = np.asarray(m, dtype=float)
        if arr.shape == (9,):
            arr = arr.reshape(3, 3)
        if arr.shape != (3, 3):
            raise ValueError(f"homography must be 3x3 (or 9 flat values); got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("homography entries must be finite")
        peak_idx = np.unravel_index(np.argmax(np.abs(arr)), arr.shape)
        peak = arr[peak_idx]
        if peak == 0.0:
            raise DegenerateConfiguration("homography matrix is all zeros")
        arr = arr / peak
        det = float(np.linalg.det(arr))
        if abs(det) <= DET_CUTOFF:
            raise DegenerateConfiguration(
                f"homography is numerically singular (|det| = {abs(det):.3e} after normalization)"
            )
        inv = np.linalg.inv(arr)
        arr.flags.writeable = False
        inv.flags.writeable = False
        self._m = arr
        self._m_inv = inv

    @property
    def m(self) -> np.ndarray:
        """3x3 world -> image matrix (read-only, largest-magnitude entry = 1)."""
        return self._m

    @property
    def m_inv(self) -> np.ndarray:
        """Cached 3x3 image -> world matrix (read-only)."""
        return self._m_inv

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "Homography":
        vals = list(values)
        if len(vals) != 9:
            raise ValueError(f"expected 9 row-major values, got {len(vals)}")
        return cls(np.array(vals, dtype=float).reshape(3, 3))

    def flat(self) -> list[float]:
        """Row-major list of the 9 stored entries."""
        return [float(v) for v in self._m.ravel()]

    def __reduce__(self):
        return (Homography, (np.array(self._m),))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        rows = "; ".join(" ".join(f"{v:.6g}" for v in row) for row in self._m)
        return f"Homography([{rows}])"


def _similarity_normalize(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Translate centroid to the origin and scale RMS radius to sqrt(2).

    Returns the normalized (n, 2) points and the 3x3 similarity transform T
    such that normalized_h = T @ raw_h in homogeneous coordinates.
    """
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    rms = math.sqrt(float(np.mean(np.sum(centered * centered, axis=1))))
    if rms < 1e-15:
        raise DegenerateConfiguration("all points coincide; cannot normalize")
    scale = math.sqrt(2.0) / rms
    T = np.array(
        [
            [scale, 0.0, -scale * centroid[0]],
            [0.0, scale, -scale * centroid[1]],
            [0.0, 0.0, 1.0],
        ]
    )
    return centered * scale, T


def estimate_homography(pairs: Sequence[Correspondence]) -> Homography:
    """Estimate the world -> image homography from point correspondences.

    Direct linear transform solved by SVD on the stacked 2n x 9 system,
    with both point sets similarity-normalized first (unnormalized DLT is
    numerically unusable at pixel scale) and the result denormalized after.
    The returned matrix minimizes the algebraic least-squares error.

    Raises DegenerateConfiguration for fewer than 4 pairs or a
    rank-deficient system (e.g. 3 collinear world points among 4 pairs),
    NonFiniteInput for NaN/inf coordinates.
    """
    n = len(pairs)
    if n < 4:
        raise DegenerateConfiguration(f"need at least 4 correspondences, got {n}")
    world = np.array([[c.world.x, c.world.y] for c in pairs], dtype=float)
    image = np.array([[c.image.x, c.image.y] for c in pairs], dtype=float)
    if not (np.all(np.isfinite(world)) and np.all(np.isfinite(image))):
        raise NonFiniteInput("correspondences contain non-finite coordinates")

    wn, Tw = _similarity_normalize(world)
    im, Ti = _similarity_normalize(image)

    A = np.zeros((2 * n, 9))
    for i in range(n):
        X, Y = wn[i]
        u, v = im[i]
        A[2 * i] = [-X, -Y, -1.0, 0.0, 0.0, 0.0, u * X, u * Y, u]
        A[2 * i + 1] = [0.0, 0.0, 0.0, -X, -Y, -1.0, v * X, v * Y, v]

    _, s, vt = np.linalg.svd(A)
    # s has 8 entries for the minimal 4-pair case; the smallest belongs to the
    # solution direction, so uniqueness requires the one above it to be nonzero.
    if s[-2] <= RANK_TOL * s[0]:
        raise DegenerateConfiguration(
            "design matrix is rank deficient (collinear or coincident points)"
        )
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.inv(Ti) @ Hn @ Tw
    return Homography(H)


def _apply_scalar(mat: np.ndarray, x: float, y: float) -> tuple[float, float]:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise NonFiniteInput(f"point ({x}, {y}) is not finite")
    w = mat[2, 0] * x + mat[2, 1] * y + mat[2, 2]
    if abs(w) <= W_CUTOFF:
        raise PointAtInfinity(f"point ({x}, {y}) maps to the horizon (|w| = {abs(w):.3e})")
    u = (mat[0, 0] * x + mat[0, 1] * y + mat[0, 2]) / w
    v = (mat[1, 0] * x + mat[1, 1] * y + mat[1, 2]) / w
    return float(u), float(v)


def image_to_world(h: Homography, p: ImagePoint) -> WorldPoint:
    """Map a pixel to the ground plane: dehomogenized M^-1 [x, y, 1].

    Raises PointAtInfinity when the homogeneous scale |w| <= 1e-12, which
    signals a pixel on or beyond the horizon.
    """
    return WorldPoint(*_apply_scalar(h.m_inv, p.x, p.y))


def world_to_image(h: Homography, p: WorldPoint) -> ImagePoint:
    """Map a ground-plane point into the image: dehomogenized M [x, y, 1]."""
    return ImagePoint(*_apply_scalar(h.m, p.x, p.y))


def _apply_many(mat: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(pts, dtype=float)
    u = mat[0, 0] * pts[:, 0] + mat[0, 1] * pts[:, 1] + mat[0, 2]
    v = mat[1, 0] * pts[:, 0] + mat[1, 1] * pts[:, 1] + mat[1, 2]
    w = mat[2, 0] * pts[:, 0] + mat[2, 1] * pts[:, 1] + mat[2, 2]
    ok = np.abs(w) > W_CUTOFF
    out = np.empty_like(pts)
    safe_w = np.where(ok, w, 1.0)
    out[:, 0] = u / safe_w
    out[:, 1] = v / safe_w
    return out, ok


def image_to_world_many(h: Homography, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized image -> world for an (n, 2) pixel array.

    Returns (world points (n, 2), valid mask); rows with |w| <= 1e-12 are
    flagged invalid instead of raising, so callers can drop and count them.
    """
    return _apply_many(h.m_inv, pts)


def world_to_image_many(h: Homography, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized world -> image for an (n, 2) meter array; see image_to_world_many."""
    return _apply_many(h.m, pts)
