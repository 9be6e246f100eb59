"""Shared fixtures: synthesized video clips and a report directory.

Clips are written with OpenCV's MJPG encoder: a dark background with
three bright rectangles gliding across it, or nothing at all for the
blank clip.  The report directory is produced by driving the installed
`distmon` command line end to end, so these tests touch the monitoring
system only through its public interfaces.
"""
from __future__ import annotations

import subprocess
from pathlib import Path

import pytest

from adapter_helpers import CONFIG_DIR, DISTMON, write_clip


@pytest.fixture(scope="session")
def moving_clip(tmp_path_factory) -> Path:
    return write_clip(tmp_path_factory.mktemp("clips") / "moving.avi", moving=True)


@pytest.fixture(scope="session")
def blank_clip(tmp_path_factory) -> Path:
    return write_clip(tmp_path_factory.mktemp("clips") / "blank.avi", moving=False)


@pytest.fixture(scope="session")
def wide_scene(tmp_path_factory) -> Path:
    """Identity-camera scene whose region covers the whole clip image."""
    path = tmp_path_factory.mktemp("scene") / "scene.ini"
    path.write_text(
        "[homography]\n"
        "direction = world_to_image\n"
        "matrix = 1 0 0 0 1 0 0 0 1\n"
        "\n"
        "[roi]\n"
        "vertices =\n"
        "    0 0\n"
        "    200 0\n"
        "    200 200\n"
        "    0 200\n"
        "\n"
        "[monitor]\n"
        "d_c = 2.0\n"
        "u0 = 0.05\n"
        "score_threshold = 0.1\n",
        encoding="utf-8",
    )
    return path


@pytest.fixture(scope="session")
def report_dir(tmp_path_factory) -> Path:
    """Report CSVs from a full simulate -> monitor -> report pipeline run."""
    if DISTMON is None:
        pytest.skip("distmon CLI not on PATH")
    work = tmp_path_factory.mktemp("report")
    sim = subprocess.run(
        [DISTMON, "simulate", "--config", str(CONFIG_DIR / "sim.example.ini"), "--seed", "11"],
        capture_output=True, text=True,
    )
    assert sim.returncode == 0, sim.stderr
    mon = subprocess.run(
        [DISTMON, "monitor", "--scene", str(CONFIG_DIR / "scene.example.ini"), "--rho-c", "0.03"],
        input=sim.stdout, capture_output=True, text=True,
    )
    assert mon.returncode == 0, mon.stderr
    assessments = work / "assessments.jsonl"
    assessments.write_text(mon.stdout, encoding="utf-8")
    out_dir = work / "csv"
    rep = subprocess.run(
        [DISTMON, "report", "--input", str(assessments), "--out-dir", str(out_dir)],
        capture_output=True, text=True,
    )
    assert rep.returncode == 0, rep.stderr
    return out_dir
