"""Contrast-preserving HDR tone mapping solved by iterated conditional modes."""

from .contrast import ContrastSystem, build_contrast_system, objective
from .edges import AdaptationMaps, EdgeParams, build_adaptation
from .errors import (
    DegenerateInputError,
    HdrFormatError,
    NumericalError,
    ToneMapError,
    TruncationError,
    UnsupportedError,
)
from .hdr_io import (
    HdrImage,
    LdrImage,
    extract_luminance,
    load_hdr_file,
    load_pfm,
    load_radiance_hdr,
    recombine_color,
    write_display,
)
from .reference import TroParams, reference_brightness, tro_map
from .solver import CompressParams, SolverConfig, SolveReport, compress, compress_detailed, solve

__version__ = "0.1.0"
