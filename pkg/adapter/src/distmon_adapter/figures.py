"""Report CSVs in, PNG figures out.

Consumes the analysis directory the report pipeline writes (a time
series plus long-form 2D histograms) and renders one image per file
under deterministic names.  Rendering is headless and fully
deterministic: fixed figure size, fixed axes placement, grayscale
histogram shading scaled to the maximum cell count.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first
import numpy as np  # noqa: E402

from .config import MissingInput

# (input file, output file) pairs this renderer knows how to draw
KNOWN_FILES = (
    ("timeseries.csv", "timeseries.png"),
    ("hist_rho_davg.csv", "hist_rho_davg.png"),
    ("hist_rho_v.csv", "hist_rho_v.png"),
)

FIGSIZE = (6.0, 4.0)
DPI = 100
AXES_RECT = (0.1, 0.1, 0.8, 0.8)


def _float_or_none(cell: str) -> float | None:
    if cell == "":
        return None
    value = float(cell)
    return value if math.isfinite(value) else None


def _read_timeseries(path: Path) -> dict[str, list]:
    with open(path, newline="", encoding="utf-8") as fp:
        reader = csv.DictReader(fp)
        if reader.fieldnames is None or "t" not in reader.fieldnames:
            raise MissingInput(f"{path} is not a time-series CSV (no 't' column)")
        columns: dict[str, list] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name in columns:
                columns[name].append(_float_or_none(row[name]))
    return columns


def _render_timeseries(src: Path, dst: Path) -> None:
    columns = _read_timeseries(src)
    fig = plt.figure(figsize=FIGSIZE, dpi=DPI)
    ax = fig.add_axes(AXES_RECT)
    ax.set_xlabel("t")
    ax.set_ylabel("rho")
    twin = ax.twinx()
    twin.set_ylabel("v")
    t = columns.get("t", [])
    for axis, key, style in ((ax, "rho", "C0-"), (twin, "v", "C1-")):
        series = columns.get(key, [])
        points = [(ti, yi) for ti, yi in zip(t, series) if ti is not None and yi is not None]
        if points:
            xs, ys = zip(*points)
            axis.plot(xs, ys, style, label=key)
    fig.savefig(dst)
    plt.close(fig)


def _read_hist(path: Path) -> tuple[str, str, np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        if header is None or len(header) != 3 or header[2] != "count":
            raise MissingInput(f"{path} is not a long-form histogram CSV")
        x_name = header[0].removesuffix("_bin_center")
        y_name = header[1].removesuffix("_bin_center")
        rows = [(float(x), float(y), int(c)) for x, y, c in reader]
    if not rows:
        raise MissingInput(f"{path} has no histogram cells")
    x_centers = np.array(sorted({r[0] for r in rows}))
    y_centers = np.array(sorted({r[1] for r in rows}))
    counts = np.zeros((len(x_centers), len(y_centers)), dtype=np.int64)
    x_index = {x: i for i, x in enumerate(x_centers)}
    y_index = {y: j for j, y in enumerate(y_centers)}
    for x, y, c in rows:
        counts[x_index[x], y_index[y]] = c
    return x_name, y_name, x_centers, y_centers, counts


def _extent(centers: np.ndarray) -> tuple[float, float]:
    half = (centers[1] - centers[0]) / 2.0 if len(centers) > 1 else 0.5
    return float(centers[0] - half), float(centers[-1] + half)


def _render_hist(src: Path, dst: Path) -> None:
    x_name, y_name, x_centers, y_centers, counts = _read_hist(src)
    x_lo, x_hi = _extent(x_centers)
    y_lo, y_hi = _extent(y_centers)
    fig = plt.figure(figsize=FIGSIZE, dpi=DPI)
    ax = fig.add_axes(AXES_RECT)
    ax.imshow(
        counts.T,
        origin="lower",
        extent=(x_lo, x_hi, y_lo, y_hi),
        aspect="auto",
        cmap="gray",
        vmin=0,
        vmax=max(1, int(counts.max())),
        interpolation="nearest",
    )
    ax.set_xlabel(x_name)
    ax.set_ylabel(y_name)
    fig.savefig(dst)
    plt.close(fig)


def render_figures(in_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Render every report CSV present in in_dir to a PNG in out_dir.

    Output names are fixed per input file.  Raises MissingInput when the
    input directory does not exist or holds none of the report files.
    """
    in_path = Path(in_dir)
    if not in_path.is_dir():
        raise MissingInput(f"report directory {in_path} does not exist")
    present = [(in_path / src, dst) for src, dst in KNOWN_FILES if (in_path / src).is_file()]
    if not present:
        names = ", ".join(src for src, _ in KNOWN_FILES)
        raise MissingInput(f"no report CSVs ({names}) in {in_path}")
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    written = []
    for src, dst_name in present:
        dst = out_path / dst_name
        if src.name == "timeseries.csv":
            _render_timeseries(src, dst)
        else:
            _render_hist(src, dst)
        written.append(dst)
    return written
