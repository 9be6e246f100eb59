"""HTTP service: endpoint contracts, status codes, session lifecycle."""
from __future__ import annotations

import math

import pytest
from fastapi.testclient import TestClient

from distmon import __version__
from distmon.service.app import create_app

IDENTITY = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]

MONITOR_SCENE = {
    "matrix": IDENTITY,
    "roi_vertices": [[0, 0], [10, 0], [10, 10], [0, 10]],
    "d_c": 2.0,
}

# Larger walk region around the monitored square, same (identity) camera:
# agents wander in and out, so the per-frame count varies.
WALK_SCENE = {
    "matrix": IDENTITY,
    "roi_vertices": [[-5, -5], [15, -5], [15, 15], [-5, 15]],
}


def person(x: float, y: float) -> dict:
    return {"label": "person", "score": 0.9, "bbox": [x - 0.5, y - 1.0, x + 0.5, y]}


@pytest.fixture
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture
def session_id(client):
    resp = client.post("/sessions", json={"scene": MONITOR_SCENE, "rho_c": 0.015})
    assert resp.status_code == 201
    return resp.json()["session_id"]


class TestHealth:
    def test_ok(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok", "version": __version__}


class TestCalibrate:
    def test_four_pairs(self, client):
        pairs = [
            {"image": [2 * x + 5, 2 * y - 3], "world": [x, y]}
            for x, y in [(0, 0), (10, 0), (10, 10), (0, 10)]
        ]
        resp = client.post("/calibrate", json={"pairs": pairs})
        assert resp.status_code == 200
        body = resp.json()
        assert body["direction"] == "world_to_image"
        m = body["matrix"]
        # apply the returned row-major matrix to a held-out world point
        x, y = 3.0, 7.0
        w = m[6] * x + m[7] * y + m[8]
        u = (m[0] * x + m[1] * y + m[2]) / w
        v = (m[3] * x + m[4] * y + m[5]) / w
        assert math.hypot(u - (2 * x + 5), v - (2 * y - 3)) < 1e-9

    def test_three_pairs_rejected(self, client):
        pairs = [{"image": [0, 0], "world": [0, 0]}] * 3
        resp = client.post("/calibrate", json={"pairs": pairs})
        assert resp.status_code == 422

    def test_collinear_pairs_domain_error(self, client):
        pairs = [
            {"image": [i, i], "world": [i, i]} for i in range(4)
        ]
        resp = client.post("/calibrate", json={"pairs": pairs})
        assert resp.status_code == 400
        assert "detail" in resp.json()


class TestSessionLifecycle:
    def test_initial_status(self, client, session_id):
        resp = client.get(f"/sessions/{session_id}")
        assert resp.status_code == 200
        assert resp.json() == {
            "session_id": session_id,
            "frames_processed": 0,
            "dropped_detections": 0,
            "samples": 0,
            "rho_c": 0.015,
        }

    def test_frames_assessed(self, client, session_id):
        frames = [
            {"frame": 0, "t": 0.0, "detections": [person(2, 2), person(2, 3)]},
            {"frame": 1, "t": 0.1, "detections": [person(5, 5)]},
        ]
        resp = client.post(f"/sessions/{session_id}/frames", json={"frames": frames})
        assert resp.status_code == 200
        body = resp.json()
        assert body["dropped_detections"] == 0
        first, second = body["assessments"]
        assert first == {
            "frame": 0, "t": 0.0, "n": 2, "rho": 0.02, "v": 2,
            "pair_violations": 1, "d_min": 1.0, "d_avg": 1.0, "c1": 1, "c2": 1,
        }
        assert second["n"] == 1
        assert "d_min" not in second and "d_avg" not in second

        status = client.get(f"/sessions/{session_id}").json()
        assert status["frames_processed"] == 2
        assert status["samples"] == 2

    def test_out_of_order_conflict(self, client, session_id):
        frames = [{"frame": 5, "t": 0.5, "detections": []}]
        assert client.post(
            f"/sessions/{session_id}/frames", json={"frames": frames}
        ).status_code == 200
        resp = client.post(f"/sessions/{session_id}/frames", json={"frames": frames})
        assert resp.status_code == 409

    def test_dropped_detections_reported(self, client, session_id):
        frames = [
            {"frame": 0, "t": 0.0,
             "detections": [person(2, 2), person(50, 50)]},  # second outside roi
        ]
        body = client.post(
            f"/sessions/{session_id}/frames", json={"frames": frames}
        ).json()
        assert body["dropped_detections"] == 1
        assert body["assessments"][0]["n"] == 1

    def test_delete(self, client, session_id):
        assert client.delete(f"/sessions/{session_id}").status_code == 204
        assert client.get(f"/sessions/{session_id}").status_code == 404

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/deadbeef").status_code == 404
        assert client.delete("/sessions/deadbeef").status_code == 404
        assert client.post(
            "/sessions/deadbeef/frames",
            json={"frames": [{"frame": 0, "t": 0.0, "detections": []}]},
        ).status_code == 404
        assert client.post("/sessions/deadbeef/fit", json={}).status_code == 404

    def test_bad_scene_rejected(self, client):
        scene = dict(MONITOR_SCENE, matrix=[0.0] * 9)
        resp = client.post("/sessions", json={"scene": scene})
        assert resp.status_code == 400

    def test_self_intersecting_roi_rejected(self, client):
        scene = dict(
            MONITOR_SCENE,
            roi_vertices=[[0, 0], [4, 0], [3, 3], [2, -1]],
        )
        assert client.post("/sessions", json={"scene": scene}).status_code == 400


class TestSessionFit:
    def test_too_few_samples(self, client, session_id):
        resp = client.post(f"/sessions/{session_id}/fit", json={})
        assert resp.status_code == 400

    def test_constant_density_rejected(self, client, session_id):
        frames = [{"frame": i, "t": i * 0.1, "detections": []} for i in range(4)]
        client.post(f"/sessions/{session_id}/frames", json={"frames": frames})
        resp = client.post(f"/sessions/{session_id}/fit", json={})
        assert resp.status_code == 400

    def test_fit_from_simulated_traffic(self, client):
        sim = client.post(
            "/simulate",
            json={"scene": WALK_SCENE, "seed": 21, "agent_count": 12,
                  "duration": 30, "frame_rate": 10},
        )
        assert sim.status_code == 200
        frames = sim.json()["frames"]
        assert len(frames) == 300

        session = client.post("/sessions", json={"scene": MONITOR_SCENE}).json()
        sid = session["session_id"]
        for start in range(0, len(frames), 100):
            resp = client.post(
                f"/sessions/{sid}/frames",
                json={"frames": frames[start:start + 100]},
            )
            assert resp.status_code == 200

        fit = client.post(f"/sessions/{sid}/fit", json={})
        assert fit.status_code == 200
        body = fit.json()
        assert body["n"] == 300
        assert body["beta1"] > 0
        assert body["status"] in ("ok", "already_violating")
        assert body["level"] == 0.95  # default 1 - u0

        custom = client.post(f"/sessions/{sid}/fit", json={"level": 0.8})
        assert custom.status_code == 200
        assert custom.json()["level"] == 0.8
        # narrower band clears zero earlier
        if body["status"] == "ok" and custom.json()["status"] == "ok":
            assert custom.json()["rho_c"] <= body["rho_c"]


class TestDensityFit:
    def test_direct_samples(self, client):
        samples = [
            [0.01 * i, -1.0 + 30 * 0.01 * i + (0.05 if i % 2 else -0.05)]
            for i in range(10)
        ]
        resp = client.post("/density/fit", json={"samples": samples})
        assert resp.status_code == 200
        body = resp.json()
        assert body["beta1"] == pytest.approx(30.0, rel=0.05)
        assert body["status"] == "ok"
        assert body["rho_c"] > 1.0 / 30.0  # band crossing is past the line's root

    def test_constant_x_rejected(self, client):
        samples = [[0.5, float(i)] for i in range(5)]
        resp = client.post("/density/fit", json={"samples": samples})
        assert resp.status_code == 400

    def test_bad_level_rejected(self, client):
        samples = [[0.01 * i, float(i)] for i in range(5)]
        resp = client.post("/density/fit", json={"samples": samples, "level": 1.0})
        assert resp.status_code == 422


class TestSimulate:
    def test_deterministic(self, client):
        req = {"scene": WALK_SCENE, "seed": 9, "agent_count": 5,
               "duration": 2, "frame_rate": 5}
        a = client.post("/simulate", json=req).json()
        b = client.post("/simulate", json=req).json()
        assert a == b
        assert len(a["frames"]) == 10
        assert all(len(f["detections"]) == 5 for f in a["frames"])
        assert "truth" not in a

    def test_truth_positions(self, client):
        req = {"scene": WALK_SCENE, "seed": 9, "agent_count": 3,
               "duration": 1, "frame_rate": 5, "include_truth": True}
        body = client.post("/simulate", json=req).json()
        assert len(body["truth"]) == 5
        assert all(len(t["positions"]) == 3 for t in body["truth"])
        xs = [p[0] for t in body["truth"] for p in t["positions"]]
        assert all(-5 <= x <= 15 for x in xs)

    def test_frame_cap(self, client):
        req = {"scene": WALK_SCENE, "seed": 1, "agent_count": 1,
               "duration": 3000, "frame_rate": 10}
        resp = client.post("/simulate", json=req)
        assert resp.status_code == 400
        assert "limit" in resp.json()["detail"]
