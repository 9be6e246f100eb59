"""Bridge from raw video to distmon's detection wire format.

`detect_stream` runs a pretrained person detector over a video source and
yields one wire-format record per processed frame; `render_figures` turns
a distmon report directory into plots.  Nothing here imports the distmon
package: the two sides meet only at the newline-delimited JSON contract.
"""
from .config import (
    AdapterConfig,
    AdapterError,
    MissingInput,
    ModelLoadError,
    SourceUnavailable,
)
from .detect import build_detector, detect_stream
from .figures import render_figures

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "MissingInput",
    "ModelLoadError",
    "SourceUnavailable",
    "build_detector",
    "detect_stream",
    "render_figures",
    "__version__",
]
