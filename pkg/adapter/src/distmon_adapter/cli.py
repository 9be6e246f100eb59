"""Command-line entry point: detect, render-figures.

`detect` turns a video file or camera into the newline-delimited JSON
detection stream the monitoring tools consume, one record per emitted
frame on stdout.  `render-figures` draws PNG charts from a report
directory of CSVs.

Exit codes: 0 success, 1 runtime failure (unreadable source, model that
cannot load, missing report directory), 2 usage or validation error.
Diagnostics go to stderr; the detection stream stays clean on stdout.
The DISTMON_ADAPTER_LOG environment variable (DEBUG/INFO/WARNING/ERROR)
sets verbosity.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys

from .config import AdapterConfig, AdapterError
from .detect import detect_stream
from .figures import render_figures

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _setup_logging() -> None:
    level_name = os.environ.get("DISTMON_ADAPTER_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
    )


def cmd_detect(args) -> int:
    source: str | int = int(args.source) if args.source.isdigit() else args.source
    cfg = AdapterConfig(
        source=source,
        model_name=args.model,
        score_floor=args.score_floor,
        frame_stride=args.stride,
        fps=args.fps,
    )
    with contextlib.ExitStack() as stack:
        if args.out:
            out = stack.enter_context(open(args.out, "w", encoding="utf-8"))
        else:
            out = sys.stdout
        for record in detect_stream(cfg):
            out.write(json.dumps(record, separators=(",", ":")))
            out.write("\n")
            out.flush()
    return EXIT_OK


def cmd_render_figures(args) -> int:
    written = render_figures(args.in_dir, args.out_dir)
    for path in written:
        sys.stdout.write(f"{path}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distmon-adapter",
        description="Bridge real video into the distancing monitor: run a "
        "detector over a source, or chart a report directory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="stream detection records from a video source")
    p.add_argument("--source", required=True, help="video file path or camera index")
    p.add_argument("--model", default="faster-rcnn",
                   help="detector preset: motion, faster-rcnn, or ssdlite")
    p.add_argument("--score-floor", type=float, default=0.0, dest="score_floor",
                   help="drop detections scoring below this")
    p.add_argument("--stride", type=int, default=1,
                   help="emit every stride-th frame")
    p.add_argument("--fps", type=float, help="override the source frame rate")
    p.add_argument("--out", help="write records here instead of stdout")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("render-figures", help="draw PNGs from report CSVs")
    p.add_argument("--in", required=True, dest="in_dir", help="report CSV directory")
    p.add_argument("--out", required=True, dest="out_dir", help="output image directory")
    p.set_defaults(func=cmd_render_figures)

    return parser


def render_figures_main(argv: list[str] | None = None) -> int:
    """Standalone figure script: same behavior as the render-figures subcommand."""
    args = sys.argv[1:] if argv is None else argv
    return main(["render-figures", *args])


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
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream consumer closed the pipe; not an error for a stream tool
        try:
            sys.stdout.close()
        except Exception:
            pass
        return EXIT_OK
    except (AdapterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
