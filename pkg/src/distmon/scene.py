"""Region-of-interest polygon and scene configuration.

The scene bundles everything the monitor needs about a camera view:
the calibrated homography, the ground-plane ROI polygon, the minimum
allowed inter-pedestrian distance, the violation-probability budget,
and the detector confidence cutoff.
"""
from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DistmonError
from .geometry import Homography, WorldPoint

log = logging.getLogger(__name__)

# Directions accepted in config files; storage is always world -> image.
DIRECTION_WORLD_TO_IMAGE = "world_to_image"
DIRECTION_IMAGE_TO_WORLD = "image_to_world"


class SceneError(DistmonError):
    """Base class for ROI / scene configuration failures."""


class TooFewVertices(SceneError):
    """A polygon needs at least 3 vertices."""


class SelfIntersecting(SceneError):
    """The polygon's edges cross each other."""


class ParseError(SceneError):
    """The config document is syntactically invalid or missing a field."""


class ValidationError(SceneError):
    """A parsed value violates a scene invariant; the message names it."""


def _orient(ax, ay, bx, by, cx, cy) -> float:
    """Signed twice-area of triangle abc (positive = counterclockwise)."""
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _proper_intersect(p1, p2, p3, p4) -> bool:
    """True when open segments p1p2 and p3p4 cross at an interior point."""
    d1 = _orient(p3[0], p3[1], p4[0], p4[1], p1[0], p1[1])
    d2 = _orient(p3[0], p3[1], p4[0], p4[1], p2[0], p2[1])
    d3 = _orient(p1[0], p1[1], p2[0], p2[1], p3[0], p3[1])
    d4 = _orient(p1[0], p1[1], p2[0], p2[1], p4[0], p4[1])
    return ((d1 > 0) != (d2 > 0)) and (d1 != 0) and (d2 != 0) and \
        ((d3 > 0) != (d4 > 0)) and (d3 != 0) and (d4 != 0)


@dataclass(frozen=True)
class RoiPolygon:
    """Simple ground-plane polygon; vertices normalized to counterclockwise.

    Clockwise input is auto-reversed (orientation carries no information
    here); self-intersecting or degenerate input is rejected.
    """

    vertices: tuple[WorldPoint, ...]
    _arr: np.ndarray = field(init=False, repr=False, compare=False)
    _edges: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        verts = tuple(self.vertices)
        if len(verts) < 3:
            raise TooFewVertices(f"polygon needs >= 3 vertices, got {len(verts)}")
        coords = [(float(v.x), float(v.y)) for v in verts]
        if not all(math.isfinite(x) and math.isfinite(y) for x, y in coords):
            raise ValidationError("polygon vertices must be finite")
        for i in range(len(coords)):
            if coords[i] == coords[(i + 1) % len(coords)]:
                raise ValidationError("polygon has repeated consecutive vertices")
        signed = _signed_area(coords)
        if signed == 0.0:
            raise ValidationError("polygon has zero area")
        if signed < 0.0:
            coords = coords[::-1]
            verts = verts[::-1]
        n = len(coords)
        for i in range(n):
            a, b = coords[i], coords[(i + 1) % n]
            for j in range(i + 1, n):
                # adjacent edges share an endpoint; skip them
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                c, d = coords[j], coords[(j + 1) % n]
                if _proper_intersect(a, b, c, d):
                    raise SelfIntersecting(
                        f"edges {i}-{(i + 1) % n} and {j}-{(j + 1) % n} cross"
                    )
        arr = np.array(coords, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "_arr", arr)
        # per-edge geometry (edge i runs from vertex i back to vertex i-1,
        # matching the ray-casting loop order), cached for the batch test
        prev = np.vstack([arr[-1:], arr[:-1]])
        edge = prev - arr
        seg2 = edge[:, 0] ** 2 + edge[:, 1] ** 2
        tol = 1e-12 * np.maximum(1.0, seg2)
        cached = (arr[:, 0:1], arr[:, 1:2], prev[:, 0:1], prev[:, 1:2],
                  edge[:, 0:1], edge[:, 1:2], seg2[:, None], tol[:, None])
        for block in cached:
            block.flags.writeable = False
        object.__setattr__(self, "_edges", cached)

    @property
    def as_array(self) -> np.ndarray:
        """(n, 2) read-only vertex array, counterclockwise."""
        return self._arr


def _signed_area(coords) -> float:
    n = len(coords)
    terms = []
    for i in range(n):
        x1, y1 = coords[i]
        x2, y2 = coords[(i + 1) % n]
        terms.append(x1 * y2 - x2 * y1)
    return math.fsum(terms) / 2.0


def polygon_area(roi: RoiPolygon) -> float:
    """Shoelace area of the ROI (m^2); positive because vertices are CCW."""
    coords = [(p.x, p.y) for p in roi.vertices]
    return _signed_area(coords)


def contains(roi: RoiPolygon, p: WorldPoint) -> bool:
    """Even-odd point-in-polygon test; boundary points count as inside.

    A pedestrian standing on the ROI edge should be monitored, so the
    boundary decision is inclusive and fixed.
    """
    x, y = float(p.x), float(p.y)
    coords = roi.as_array
    n = len(coords)
    # inclusive boundary: check edge membership before ray casting
    for i in range(n):
        ax, ay = coords[i]
        bx, by = coords[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        px, py = x - ax, y - ay
        cross = ex * py - ey * px
        seg2 = ex * ex + ey * ey
        tol = 1e-12 * max(1.0, seg2)
        if abs(cross) <= tol:
            dot = ex * px + ey * py
            if -tol <= dot <= seg2 + tol:
                return True
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = coords[i]
        xj, yj = coords[j]
        if (yi > y) != (yj > y):
            x_cross = (xj - xi) * (y - yi) / (yj - yi) + xi
            if x < x_cross:
                inside = not inside
        j = i
    return inside


def contains_many(roi: RoiPolygon, pts: np.ndarray) -> np.ndarray:
    """Vectorized `contains` for an (n, 2) array; returns a boolean mask.

    Broadcasts every edge against every point using the polygon's cached
    edge geometry; the arithmetic mirrors the scalar test expression for
    expression, so both give the same verdicts.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.size == 0:
        return np.zeros(0, dtype=bool)
    x = pts[:, 0]
    y = pts[:, 1]
    ax, ay, _bx, by, ex, ey, seg2, tol = roi._edges
    px = x - ax  # (edges, points)
    py = y - ay
    cross = ex * py - ey * px
    dot = ex * px + ey * py
    on_edge = (
        (np.abs(cross) <= tol) & (dot >= -tol) & (dot <= seg2 + tol)
    ).any(axis=0)
    # half-open crossing rule
    crossing = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = ex * py / ey + ax
    inside = ((crossing & (x < x_cross)).sum(axis=0) & 1).astype(bool)
    return inside | on_edge


@dataclass(frozen=True)
class SceneConfig:
    """Per-camera monitoring parameters; immutable after load.

    area_a0 overrides the polygon's shoelace area when given (a measured
    ROI area may include corrections the polygon cannot carry).
    """

    homography: Homography
    roi: RoiPolygon
    min_distance_dc: float = 2.0
    violation_budget_u0: float = 0.05
    score_threshold: float = 0.5
    area_a0: float | None = None

    def __post_init__(self) -> None:
        if not (self.min_distance_dc > 0):
            raise ValidationError("min_distance_dc must be > 0")
        if not (0.0 < self.violation_budget_u0 < 1.0):
            raise ValidationError("violation_budget_u0 must lie in (0, 1)")
        if not (0.0 <= self.score_threshold <= 1.0):
            raise ValidationError("score_threshold must lie in [0, 1]")
        if self.area_a0 is not None and not (self.area_a0 > 0):
            raise ValidationError("area_a0 must be > 0 when present")

    @property
    def area(self) -> float:
        """Effective ROI area A0: the override when present, else shoelace."""
        if self.area_a0 is not None:
            return self.area_a0
        return polygon_area(self.roi)


def _get(cp: configparser.ConfigParser, section: str, option: str, required: bool = True) -> str | None:
    if not cp.has_section(section):
        if required:
            raise ParseError(f"missing section [{section}]")
        return None
    if not cp.has_option(section, option):
        if required:
            raise ParseError(f"missing field '{option}' in section [{section}]")
        return None
    return cp.get(section, option)


def _float_field(cp, section, option, default=None):
    raw = _get(cp, section, option, required=default is None)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ParseError(f"field '{option}' in [{section}] is not a number: {raw!r}") from exc


def parse_config(text: str) -> configparser.ConfigParser:
    """Parse an INI document; wraps configparser errors (line info kept)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc
    return cp


def roi_from_text(raw: str) -> RoiPolygon:
    """Parse 'x y' vertex pairs (whitespace/newline separated) into a polygon."""
    tokens = raw.replace(",", " ").split()
    if len(tokens) % 2 != 0:
        raise ParseError(f"roi vertices need an even number of coordinates, got {len(tokens)}")
    try:
        nums = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"roi vertices contain a non-number: {exc}") from exc
    pts = tuple(WorldPoint(nums[i], nums[i + 1]) for i in range(0, len(nums), 2))
    return RoiPolygon(pts)


def homography_from_config(cp: configparser.ConfigParser) -> Homography:
    """Read [homography] matrix (9 row-major numbers) honoring `direction`."""
    raw = _get(cp, "homography", "matrix")
    tokens = raw.split()
    if len(tokens) != 9:
        raise ParseError(f"homography matrix needs 9 numbers, got {len(tokens)}")
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"homography matrix contains a non-number: {exc}") from exc
    direction = (_get(cp, "homography", "direction", required=False) or DIRECTION_WORLD_TO_IMAGE).strip()
    if direction not in (DIRECTION_WORLD_TO_IMAGE, DIRECTION_IMAGE_TO_WORLD):
        raise ParseError(
            f"homography direction must be '{DIRECTION_WORLD_TO_IMAGE}' or "
            f"'{DIRECTION_IMAGE_TO_WORLD}', got {direction!r}"
        )
    h = Homography.from_flat(vals)
    if direction == DIRECTION_IMAGE_TO_WORLD:
        h = Homography(np.array(h.m_inv))
    return h


def load_scene(text: str) -> SceneConfig:
    """Build a validated SceneConfig from an INI document.

    Raises ParseError for syntax/missing-field problems and
    ValidationError for values that violate an invariant.
    """
    cp = parse_config(text)
    homography = homography_from_config(cp)
    roi = roi_from_text(_get(cp, "roi", "vertices"))
    d_c = _float_field(cp, "monitor", "d_c", default=2.0)
    u0 = _float_field(cp, "monitor", "u0", default=0.05)
    score_threshold = _float_field(cp, "monitor", "score_threshold", default=0.5)
    a0 = _float_field(cp, "monitor", "a0", default=math.nan)
    area_a0 = None if (a0 is None or math.isnan(a0)) else a0
    if area_a0 is not None:
        log.warning(
            "a0 override %.6g m^2 supersedes the polygon area %.6g m^2",
            area_a0, polygon_area(roi),
        )
    return SceneConfig(
        homography=homography,
        roi=roi,
        min_distance_dc=d_c,
        violation_budget_u0=u0,
        score_threshold=score_threshold,
        area_a0=area_a0,
    )
