"""Distance statistics, violation counting, and the streaming engine."""
from __future__ import annotations

import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distmon.geometry import Homography, WorldPoint
from distmon.ingest import Detection, Frame
from distmon.monitor import (
    FitAccumulator,
    MonitorEngine,
    OutOfOrderFrame,
    assess_frame,
    control_signals,
    count_violations,
    frame_stats,
    localize_pedestrians,
    pairwise_distances,
)
from distmon.scene import RoiPolygon, SceneConfig

from engine_helpers import frame_from_world


def brute_reference(points, d_c):
    """Independent double-loop oracle: distances, v, d_min, d_avg.

    Written with scalar math only; the engine must match it bit for bit.
    """
    n = len(points)
    condensed = []
    for i in range(n):
        for j in range(i + 1, n):
            dx = points[i][0] - points[j][0]
            dy = points[i][1] - points[j][1]
            condensed.append(math.sqrt(dx * dx + dy * dy))
    v = 0
    nearest = []
    for i in range(n):
        best = math.inf
        for j in range(n):
            if i == j:
                continue
            dx = points[i][0] - points[j][0]
            dy = points[i][1] - points[j][1]
            d = math.sqrt(dx * dx + dy * dy)
            if d < d_c:
                v += 1
            if d < best:
                best = d
        nearest.append(best)
    d_min = min(nearest) if n >= 2 else None
    d_avg = math.fsum(nearest) / n if n >= 2 else None
    return condensed, v, d_min, d_avg


class TestDistances:
    def test_two_points(self):
        d = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert d.tolist() == [5.0]

    def test_lexicographic_order(self):
        pts = np.array([[0.0, 0], [1, 0], [3, 0]])
        d = pairwise_distances(pts)
        assert d.tolist() == [1.0, 3.0, 2.0]  # (0,1), (0,2), (1,2)

    def test_fewer_than_two(self):
        assert pairwise_distances(np.zeros((0, 2))).size == 0
        assert pairwise_distances(np.array([[1.0, 2.0]])).size == 0

    def test_matches_oracle_bitwise(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 60))
            pts = rng.uniform(0, 20, size=(n, 2))
            condensed, v, d_min, d_avg = brute_reference(pts.tolist(), 2.0)
            assert pairwise_distances(pts).tolist() == condensed


class TestViolations:
    def test_empty_and_single(self):
        assert count_violations(np.zeros((0, 2)), 2.0) == 0
        assert count_violations(np.array([[1.0, 1.0]]), 2.0) == 0

    def test_ordered_pair_double_count(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert count_violations(pts, 2.0) == 2

    def test_strict_comparison_at_threshold(self):
        pts = np.array([[0.0, 0.0], [2.0, 0.0]])
        assert count_violations(pts, 2.0) == 0
        assert count_violations(pts, 2.0 + 1e-9) == 2

    def test_matches_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(0, 60))
            pts = rng.uniform(0, 15, size=(n, 2))
            _, v, _, _ = brute_reference(pts.tolist(), 2.0)
            assert count_violations(pts, 2.0) == v

    @given(st.integers(0, 30), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_parity_always_even(self, n, seed):
        pts = np.random.default_rng(seed).uniform(0, 10, size=(n, 2))
        assert count_violations(pts, 2.0) % 2 == 0


class TestFrameStats:
    def test_absent_distances_below_two(self):
        n, rho, v, pairs, d_min, d_avg = frame_stats(np.array([[1.0, 1.0]]), 2.0, 600.0)
        assert (n, v, pairs) == (1, 0, 0)
        assert d_min is None and d_avg is None
        assert rho == 1 / 600.0

    def test_matches_oracle_bitwise(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 60))
            pts = rng.uniform(0, 20, size=(n, 2))
            _, v_ref, dmin_ref, davg_ref = brute_reference(pts.tolist(), 2.0)
            n_out, rho, v, pairs, d_min, d_avg = frame_stats(pts, 2.0, 600.0)
            assert n_out == n
            assert v == v_ref
            assert pairs == v_ref // 2
            assert d_min == dmin_ref
            assert d_avg == davg_ref

    def test_density_is_count_over_area(self):
        pts = np.array([[1.0, 1], [2, 2], [3, 3]])
        _, rho, *_ = frame_stats(pts, 2.0, 150.0)
        assert rho == 3 / 150.0


class TestControlSignals:
    def test_proximity_signal(self):
        assert control_signals(2, 1.5, 0.01, 2.0, None) == (1, 0)
        assert control_signals(2, 2.5, 0.01, 2.0, None) == (0, 0)
        assert control_signals(0, None, 0.0, 2.0, None) == (0, 0)

    def test_density_signal_strict_above(self):
        assert control_signals(5, 3.0, 0.02, 2.0, 0.0104) == (0, 1)
        assert control_signals(5, 3.0, 0.0104, 2.0, 0.0104) == (0, 0)

    def test_no_threshold_no_signal(self):
        assert control_signals(5, 3.0, 0.5, 2.0, None)[1] == 0


class TestLocalize:
    def test_filters_score_and_label(self, scene):
        frame = frame_from_world(scene, [[10.0, 15.0]])
        low = Detection("person", 0.2, frame.detections[0].bbox)
        car = Detection("car", 0.99, frame.detections[0].bbox)
        mixed = Frame(frame=0, t=0.0, detections=frame.detections + (low, car))
        pos, dropped = localize_pedestrians(mixed, scene)
        assert len(pos) == 1
        assert dropped == 0  # filtered, not dropped

    def test_outside_roi_dropped(self, scene):
        frame = frame_from_world(scene, [[10.0, 15.0], [25.0, 15.0]])
        pos, dropped = localize_pedestrians(frame, scene)
        assert len(pos) == 1 and dropped == 1

    def test_boundary_point_kept(self, scene):
        frame = frame_from_world(scene, [[0.0, 15.0]])
        pos, dropped = localize_pedestrians(frame, scene)
        assert len(pos) == 1 and dropped == 0

    def test_recovers_positions(self, scene, rng):
        world = rng.uniform([1, 1], [19, 29], size=(30, 2))
        frame = frame_from_world(scene, world)
        pos, dropped = localize_pedestrians(frame, scene)
        assert dropped == 0
        assert np.abs(pos - world).max() < 1e-9

    def test_empty_frame(self, scene):
        pos, dropped = localize_pedestrians(Frame(0, 0.0, ()), scene)
        assert pos.shape == (0, 2) and dropped == 0


class TestEngine:
    def test_monotone_frame_indices(self, scene):
        engine = MonitorEngine(scene)
        engine.process(Frame(0, 0.0, ()))
        engine.process(Frame(5, 0.5, ()))
        with pytest.raises(OutOfOrderFrame):
            engine.process(Frame(5, 0.6, ()))
        with pytest.raises(OutOfOrderFrame):
            engine.process(Frame(2, 0.7, ()))

    def test_assessment_record_key_policy(self, scene):
        engine = MonitorEngine(scene)
        rec_empty = engine.process(Frame(0, 0.0, ())).to_record()
        assert "d_min" not in rec_empty and "d_avg" not in rec_empty
        assert rec_empty["n"] == 0 and rec_empty["v"] == 0
        frame = frame_from_world(scene, [[5.0, 5.0], [5.5, 5.0]], frame=1)
        rec = engine.process(frame).to_record()
        assert rec["d_min"] is not None and rec["c1"] == 1

    def test_dropped_counter_accumulates(self, scene):
        engine = MonitorEngine(scene)
        engine.process(frame_from_world(scene, [[10.0, 15.0], [30.0, 15.0]], frame=0))
        engine.process(frame_from_world(scene, [[40.0, 15.0]], frame=1))
        assert engine.dropped_detections == 2
        assert engine.frames_processed == 2

    def test_c2_uses_configured_threshold(self, scene):
        engine = MonitorEngine(scene, rho_c=1 / 600.0)
        frame = frame_from_world(scene, [[5.0, 5.0], [10.0, 20.0]], frame=0)
        assessment = engine.process(frame)
        assert assessment.rho == 2 / 600.0
        assert assessment.c2 == 1

    def test_constant_state_size(self, scene):
        engine = MonitorEngine(scene)
        engine.process(frame_from_world(scene, [[5.0, 5.0], [9.0, 9.0]], frame=0))
        size_first = len(pickle.dumps(engine))
        for k in range(1, 500):
            engine.process(frame_from_world(scene, [[5.0, 5.0], [9.0, 9.0]], frame=k, t=k / 10))
        size_late = len(pickle.dumps(engine))
        assert abs(size_late - size_first) <= 16

    def test_accumulator_keeps_scalars_only(self, scene):
        engine = MonitorEngine(scene)
        acc = FitAccumulator()
        for k in range(10):
            acc.add(engine.process(frame_from_world(scene, [[5.0, 5.0 + k]], frame=k)))
        assert len(acc) == 10
        assert all(isinstance(r, float) for r in acc.rho)
        assert all(isinstance(v, int) for v in acc.v)


class TestAssessFrame:
    def test_full_pipeline_values(self, scene):
        # two pedestrians 1 m apart: one violating pair, counted twice
        frame = frame_from_world(scene, [[10.0, 15.0], [11.0, 15.0]])
        a, dropped = assess_frame(frame, scene)
        assert dropped == 0
        assert a.n == 2 and a.v == 2 and a.pair_violations == 1
        assert math.isclose(a.d_min, 1.0, rel_tol=0, abs_tol=1e-9)
        assert a.c1 == 1 and a.c2 == 0

    def test_identity_homography_passthrough(self):
        scene = SceneConfig(
            homography=Homography(np.eye(3)),
            roi=RoiPolygon((
                WorldPoint(0, 0), WorldPoint(100, 0),
                WorldPoint(100, 100), WorldPoint(0, 100),
            )),
        )
        frame = Frame(0, 0.0, (
            Detection("person", 1.0, (49.0, 40.0, 51.0, 50.0)),
            Detection("person", 1.0, (59.0, 40.0, 61.0, 50.0)),
        ))
        a, _ = assess_frame(frame, scene)
        # foot points (50, 50) and (60, 50): 10 m apart
        assert a.d_min == 10.0 and a.v == 0
