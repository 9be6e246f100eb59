"""Tabular analysis outputs: per-frame time series and 2D histograms.

Takes a stream of assessment records (the monitor's JSON lines) and
writes three comma-separated files: the full time series, a density
versus average-closest-distance histogram, and a density versus
violation-count histogram.  Histograms are emitted long-form (one row
per cell) so any plotting tool can consume them.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import DistmonError

DEFAULT_BINS = 30

TIMESERIES_COLUMNS = ("t", "n", "rho", "d_min", "d_avg", "v", "c1", "c2")


class ReportError(DistmonError):
    """Base class for report generation failures."""


class EmptyInput(ReportError):
    """No usable samples to bin."""


@dataclass(frozen=True)
class Hist2D:
    """Uniform-grid 2D histogram with its exclusion tally.

    excluded counts input samples that carried an absent (None/NaN)
    coordinate; counts.sum() + excluded equals the input size.
    """

    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    excluded: int

    @property
    def x_centers(self) -> np.ndarray:
        return (self.x_edges[:-1] + self.x_edges[1:]) / 2.0

    @property
    def y_centers(self) -> np.ndarray:
        return (self.y_edges[:-1] + self.y_edges[1:]) / 2.0


def hist2d(samples: Iterable[tuple], x_bins: int = DEFAULT_BINS, y_bins: int = DEFAULT_BINS) -> Hist2D:
    """Bin (x, y) samples on a uniform grid spanning their range.

    The last bin is closed on the right, so maxima are counted.  Samples
    with a None or NaN coordinate are excluded from binning but tallied.
    """
    if x_bins < 1 or y_bins < 1:
        raise ReportError(f"bins must be >= 1, got {x_bins}x{y_bins}")
    xs, ys = [], []
    excluded = 0
    for x, y in samples:
        if x is None or y is None or not (math.isfinite(x) and math.isfinite(y)):
            excluded += 1
            continue
        xs.append(float(x))
        ys.append(float(y))
    if not xs:
        raise EmptyInput("no samples with both coordinates present")
    x_arr = np.array(xs)
    y_arr = np.array(ys)
    # degenerate axis: widen so histogram2d has a nonzero range
    x_range = _axis_range(x_arr)
    y_range = _axis_range(y_arr)
    counts, x_edges, y_edges = np.histogram2d(
        x_arr, y_arr, bins=(x_bins, y_bins), range=(x_range, y_range)
    )
    return Hist2D(
        x_edges=x_edges,
        y_edges=y_edges,
        counts=counts.astype(np.int64),
        excluded=excluded,
    )


def _axis_range(arr: np.ndarray) -> tuple[float, float]:
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        pad = 0.5 if lo == 0.0 else abs(lo) * 0.5
        return lo - pad, hi + pad
    return lo, hi


def read_assessments(lines: Iterable[str]) -> Iterator[dict]:
    """Parse assessment JSON lines; blank lines are skipped."""
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ReportError(f"line {line_no}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ReportError(f"line {line_no}: record must be a JSON object")
        yield obj


def write_time_series(records: Iterable[dict], out: IO[str]) -> int:
    """One CSV row per assessment; absent distances become empty fields."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TIMESERIES_COLUMNS)
    rows = 0
    for rec in records:
        writer.writerow([
            _cell(rec.get(col)) for col in TIMESERIES_COLUMNS
        ])
        rows += 1
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_hist_csv(hist: Hist2D, out: IO[str], x_name: str, y_name: str) -> None:
    """Long-form histogram: one row per cell, bin centers as coordinates."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"{x_name}_bin_center", f"{y_name}_bin_center", "count"])
    xc = hist.x_centers
    yc = hist.y_centers
    for i in range(len(xc)):
        for j in range(len(yc)):
            writer.writerow([repr(float(xc[i])), repr(float(yc[j])), int(hist.counts[i, j])])


def write_report(records: Iterable[dict], out_dir: str | Path, bins: int = DEFAULT_BINS) -> dict:
    """Write timeseries.csv plus both histogram CSVs into out_dir.

    Returns a small summary (row/exclusion counts).  Histogram files are
    skipped, not errored, when every sample lacks the needed fields.
    """
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    recs = list(records)
    with open(out_path / "timeseries.csv", "w", encoding="utf-8", newline="") as fp:
        rows = write_time_series(recs, fp)
    summary = {"rows": rows, "files": ["timeseries.csv"]}
    for fname, y_key in (("hist_rho_davg.csv", "d_avg"), ("hist_rho_v.csv", "v")):
        pairs = [(rec.get("rho"), rec.get(y_key)) for rec in recs]
        try:
            hist = hist2d(pairs, bins, bins)
        except EmptyInput:
            continue
        y_name = "davg" if y_key == "d_avg" else y_key
        with open(out_path / fname, "w", encoding="utf-8", newline="") as fp:
            write_hist_csv(hist, fp, "rho", y_name)
        summary["files"].append(fname)
        summary[f"{fname}:excluded"] = hist.excluded
    return summary
