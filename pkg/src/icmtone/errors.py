"""Exception types raised by the tone-mapping pipeline."""

from __future__ import annotations


class ToneMapError(Exception):
    """Base class for all pipeline errors."""


class HdrFormatError(ToneMapError, ValueError):
    """Input bytes are not a well-formed HDR container."""


class TruncationError(HdrFormatError):
    """Input ended before all declared samples were read."""


class UnsupportedError(HdrFormatError):
    """Well-formed input using a feature this reader does not handle."""


class DegenerateInputError(ToneMapError, ValueError):
    """Image content that cannot be tone mapped (e.g. all black)."""


class NumericalError(ToneMapError, ArithmeticError):
    """A non-finite value appeared during optimization."""
