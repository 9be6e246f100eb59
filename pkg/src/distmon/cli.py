"""Command-line entry point: calibrate, simulate, monitor, fit, report.

The workflow has two phases.  First `fit-density` consumes a finite
detection stream and writes a fit report containing the critical
density.  Then `monitor` runs indefinitely with that threshold (or an
explicit --rho-c), emitting one assessment record per frame and keeping
nothing else.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
Diagnostics go to stderr; data streams stay clean on stdout.  The
DISTMON_LOG environment variable (DEBUG/INFO/WARNING/ERROR) sets
verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .density import critical_density, fit_ols, fit_report
from .errors import DistmonError
from .geometry import Correspondence, ImagePoint, WorldPoint, estimate_homography
from .ingest import IngestError, ParseStats, parse_frame, serialize_frame
from .monitor import FitAccumulator, MonitorEngine, OutOfOrderFrame, assess_frame
from .report import read_assessments, write_report
from .scene import ParseError, ValidationError, load_scene
from .simulate import load_sim_config, simulate_stream

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _setup_logging() -> None:
    level_name = os.environ.get("DISTMON_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _read_pairs(path: str) -> list[Correspondence]:
    """Parse a correspondence file: 'ix iy wx wy' per line, # comments."""
    pairs = []
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != 4:
            raise ParseError(
                f"{path}:{line_no}: expected 4 numbers (ix iy wx wy), got {len(tokens)}"
            )
        try:
            ix, iy, wx, wy = (float(t) for t in tokens)
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: non-number in pair: {exc}") from exc
        pairs.append(Correspondence(image=ImagePoint(ix, iy), world=WorldPoint(wx, wy)))
    return pairs


def _homography_snippet(flat: list[float]) -> str:
    nums = " ".join(repr(v) for v in flat)
    return f"[homography]\ndirection = world_to_image\nmatrix = {nums}\n"


def cmd_calibrate(args) -> int:
    pairs = _read_pairs(args.pairs)
    h = estimate_homography(pairs)
    snippet = _homography_snippet(h.flat())
    if args.output:
        Path(args.output).write_text(snippet, encoding="utf-8")
        log.info("wrote homography to %s", args.output)
    sys.stdout.write(snippet)
    return EXIT_OK


def cmd_simulate(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8")
    cfg = load_sim_config(text, seed=args.seed)
    truth_fp = open(args.truth, "w", encoding="utf-8") if args.truth else None
    try:
        for truth in simulate_stream(cfg):
            sys.stdout.write(serialize_frame(truth.emitted))
            sys.stdout.write("\n")
            if truth_fp is not None:
                rec = {
                    "frame": truth.frame,
                    "positions": [[p.x, p.y] for p in truth.positions],
                }
                truth_fp.write(json.dumps(rec, separators=(",", ":")))
                truth_fp.write("\n")
    finally:
        if truth_fp is not None:
            truth_fp.close()
    return EXIT_OK


def _load_rho_c(args) -> float | None:
    if args.rho_c is not None:
        if not (args.rho_c >= 0):
            raise ValidationError(f"--rho-c must be >= 0, got {args.rho_c}")
        return args.rho_c
    if args.fit:
        with open(args.fit, encoding="utf-8") as fp:
            try:
                report = json.load(fp)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{args.fit}: invalid JSON: {exc}") from exc
        if not isinstance(report, dict) or "rho_c" not in report:
            raise ParseError(f"{args.fit}: fit report must contain 'rho_c'")
        rho_c = report["rho_c"]
        if not isinstance(rho_c, (int, float)) or isinstance(rho_c, bool):
            raise ParseError(f"{args.fit}: 'rho_c' must be a number")
        return float(rho_c)
    return None


def cmd_monitor(args) -> int:
    scene = load_scene(Path(args.scene).read_text(encoding="utf-8"))
    rho_c = _load_rho_c(args)
    engine = MonitorEngine(scene, rho_c=rho_c)
    strict = not args.lenient
    stats = ParseStats()
    out = sys.stdout
    for line_no, line in enumerate(sys.stdin, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        stats.lines += 1
        try:
            frame = parse_frame(stripped)
        except IngestError as exc:
            if strict:
                raise type(exc)(f"line {line_no}: {exc}") from exc
            stats.note_error(line_no, exc)
            continue
        stats.frames += 1
        assessment = engine.process(frame)
        out.write(json.dumps(assessment.to_record(), separators=(",", ":")))
        out.write("\n")
    if stats.rejected:
        log.warning(
            "skipped %d of %d lines; first errors: %s",
            stats.rejected, stats.lines, "; ".join(stats.first_errors),
        )
    log.info(
        "processed %d frames, dropped %d detections",
        engine.frames_processed, engine.dropped_detections,
    )
    return EXIT_OK


def cmd_fit_density(args) -> int:
    scene = load_scene(Path(args.scene).read_text(encoding="utf-8"))
    level = args.level if args.level is not None else 1.0 - scene.violation_budget_u0
    if not (0.0 < level < 1.0):
        raise ValidationError(f"--level must lie in (0, 1), got {level}")
    acc = FitAccumulator()
    last_frame = None
    for line_no, line in enumerate(sys.stdin, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            frame = parse_frame(stripped)
        except IngestError as exc:
            raise type(exc)(f"line {line_no}: {exc}") from exc
        if last_frame is not None and frame.frame <= last_frame:
            raise OutOfOrderFrame(f"frame {frame.frame} after frame {last_frame}")
        last_frame = frame.frame
        assessment, _ = assess_frame(frame, scene)
        acc.add(assessment)
    fit = fit_ols(zip(acc.rho, acc.v))
    crit = critical_density(fit, level=level)
    json.dump(fit_report(crit), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.input, encoding="utf-8") as fp:
        summary = write_report(read_assessments(fp), args.out_dir, bins=args.bins)
    log.info("report written: %s", summary)
    sys.stdout.write(json.dumps(summary, separators=(",", ":")))
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distmon",
        description="Pedestrian distancing monitor: calibration, simulation, "
        "streaming assessment, density fitting, reporting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="estimate a homography from point pairs")
    p.add_argument("--pairs", required=True, help="file of 'ix iy wx wy' lines")
    p.add_argument("-o", "--output", help="also write the config snippet here")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="emit a synthetic detection stream")
    p.add_argument("--config", required=True, help="scene config with [simulate] section")
    p.add_argument("--seed", required=True, type=int, help="stream seed")
    p.add_argument("--truth", help="also write ground-truth positions here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("monitor", help="assess frames from stdin, records to stdout")
    p.add_argument("--scene", required=True, help="scene config file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--rho-c", type=float, dest="rho_c", help="critical density threshold")
    group.add_argument("--fit", help="fit report file providing rho_c")
    p.add_argument("--strict", action="store_true", default=True,
                   help="fail on the first malformed line (default)")
    p.add_argument("--lenient", action="store_true",
                   help="skip malformed lines, tallying them on stderr")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("fit-density", help="fit the density model from frames on stdin")
    p.add_argument("--scene", required=True, help="scene config file")
    p.add_argument("--level", type=float, help="prediction interval level (default 1 - u0)")
    p.set_defaults(func=cmd_fit_density)

    p = sub.add_parser("report", help="write time-series and histogram CSVs")
    p.add_argument("--input", required=True, help="assessment records file")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--bins", type=int, default=30, help="histogram bins per axis")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed the reason; normalize the code
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream consumer closed the pipe; not an error for a stream tool
        try:
            sys.stdout.close()
        except Exception:
            pass
        return EXIT_OK
    except (DistmonError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
