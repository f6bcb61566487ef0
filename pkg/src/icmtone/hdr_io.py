"""HDR image containers, file codecs, luminance extraction and display encoding.

Readers return :class:`HdrImage` with rows ordered top to bottom.  Radiance
RGBE (flat and run-length encoded scanlines) and PFM (``PF``/``Pf``, either
endianness) are supported; output is 8-bit RGB PNG.
"""

from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .errors import DegenerateInputError, HdrFormatError, TruncationError, UnsupportedError

PathOrSink = Union[str, os.PathLike, BinaryIO, None]

DEFAULT_FLOOR_RATIO = 1e-6
DEFAULT_DISPLAY_GAMMA = 2.2

_RLE_MIN_WIDTH = 8
_RLE_MAX_WIDTH = 0x7FFF
_RESOLUTION_RE = re.compile(rb"^([-+])([XY])\s+(\d+)\s+([-+])([XY])\s+(\d+)$")


@dataclass(frozen=True)
class HdrImage:
    """Scene-referred linear RGB image, ``rgb`` shaped (height, width, 3)."""

    rgb: np.ndarray

    def __post_init__(self) -> None:
        rgb = np.asarray(self.rgb, dtype=np.float64)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) samples, got {rgb.shape}")
        if rgb.shape[0] < 1 or rgb.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(rgb)) or np.any(rgb < 0):
            raise ValueError("channel values must be finite and non-negative")
        object.__setattr__(self, "rgb", rgb)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def r(self) -> np.ndarray:
        return self.rgb[..., 0]

    @property
    def g(self) -> np.ndarray:
        return self.rgb[..., 1]

    @property
    def b(self) -> np.ndarray:
        return self.rgb[..., 2]


@dataclass(frozen=True)
class LdrImage:
    """Display-referred RGB image with every channel in [0, 1]."""

    rgb: np.ndarray

    def __post_init__(self) -> None:
        rgb = np.asarray(self.rgb, dtype=np.float64)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) samples, got {rgb.shape}")
        if np.any(rgb < 0) or np.any(rgb > 1) or not np.all(np.isfinite(rgb)):
            raise ValueError("display channels must lie in [0, 1]")
        object.__setattr__(self, "rgb", rgb)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]


# ---------------------------------------------------------------------------
# Radiance RGBE


def rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    """Decode (..., 4) RGBE bytes: channel = mantissa * 2**(e - 136), zero when e == 0."""
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    e = rgbe[..., 3].astype(np.int32)
    out = np.ldexp(rgbe[..., :3].astype(np.float64), (e - 136)[..., None])
    out[e == 0] = 0.0
    return out


def float_to_rgbe(rgb: np.ndarray) -> np.ndarray:
    """Encode (..., 3) non-negative floats to RGBE bytes (inverse of :func:`rgbe_to_float`)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    v = rgb.max(axis=-1)
    mant, exp = np.frexp(v)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    ok = v > 0
    # exponent byte is limited to [1, 255]; outside that the mantissa denormalizes or saturates
    exp = np.clip(exp, -127, 127)
    scale = np.where(ok, np.ldexp(256.0, -exp), 0.0)
    mantissas = np.floor(rgb * scale[..., None])
    out[..., :3] = np.clip(mantissas, 0, 255).astype(np.uint8)
    out[..., 3] = np.where(ok, exp + 128, 0).astype(np.uint8)
    return out


def _read_header(data: bytes) -> tuple[dict[str, str], int, int, int]:
    if not (data.startswith(b"#?RADIANCE") or data.startswith(b"#?RGBE")):
        raise HdrFormatError("missing Radiance signature (#?RADIANCE or #?RGBE)")
    fields: dict[str, str] = {}
    pos = 0
    while True:
        end = data.find(b"\n", pos)
        if end < 0:
            raise HdrFormatError("header is not terminated by a blank line")
        line = data[pos:end].rstrip(b"\r")
        pos = end + 1
        if not line:
            break
        if b"=" in line and not line.startswith(b"#"):
            key, _, value = line.partition(b"=")
            fields[key.strip().decode("ascii", "replace").upper()] = value.strip().decode("ascii", "replace")

    end = data.find(b"\n", pos)
    if end < 0:
        raise HdrFormatError("missing resolution line")
    res = data[pos:end].strip()
    pos = end + 1
    m = _RESOLUTION_RE.match(res)
    if m is None:
        raise HdrFormatError(f"malformed resolution line {res!r}")
    if (m.group(1), m.group(2), m.group(4), m.group(5)) != (b"-", b"Y", b"+", b"X"):
        raise UnsupportedError(f"unsupported orientation {res.decode('ascii', 'replace')!r}")
    height, width = int(m.group(3)), int(m.group(6))
    if width < 1 or height < 1:
        raise HdrFormatError("image dimensions must be positive")
    return fields, width, height, pos


def _decode_rle_scanline(data: bytes, pos: int, width: int, out: np.ndarray) -> int:
    n = len(data)
    for c in range(4):
        x = 0
        while x < width:
            if pos >= n:
                raise TruncationError("scanline ended inside a run-length stream")
            code = data[pos]
            pos += 1
            if code > 128:
                count = code - 128
                if pos >= n:
                    raise TruncationError("scanline ended inside a run")
                if x + count > width:
                    raise HdrFormatError("run overflows scanline")
                out[x:x + count, c] = data[pos]
                pos += 1
            else:
                count = code
                if count == 0 or x + count > width:
                    raise HdrFormatError("bad literal length in scanline")
                if pos + count > n:
                    raise TruncationError("scanline ended inside a literal run")
                out[x:x + count, c] = np.frombuffer(data, np.uint8, count, pos)
                pos += count
            x += count
    return pos


def load_radiance_hdr(data: bytes) -> HdrImage:
    """Decode a Radiance ``.hdr``/``.pic`` byte string."""
    data = bytes(data)
    fields, width, height, pos = _read_header(data)
    fmt = fields.get("FORMAT")
    if fmt is not None and fmt != "32-bit_rle_rgbe":
        raise UnsupportedError(f"unsupported pixel format {fmt!r}")

    rgbe = np.empty((height, width, 4), dtype=np.uint8)
    n = len(data)
    for y in range(height):
        rle = (
            _RLE_MIN_WIDTH <= width <= _RLE_MAX_WIDTH
            and pos + 4 <= n
            and data[pos] == 2
            and data[pos + 1] == 2
            and data[pos + 2] & 0x80 == 0
        )
        if rle:
            if (data[pos + 2] << 8 | data[pos + 3]) != width:
                raise HdrFormatError(f"scanline {y} length does not match image width")
            pos = _decode_rle_scanline(data, pos + 4, width, rgbe[y])
        else:
            if pos + 4 * width > n:
                raise TruncationError(f"flat scanline {y} is truncated")
            rgbe[y] = np.frombuffer(data, np.uint8, 4 * width, pos).reshape(width, 4)
            pos += 4 * width
    return HdrImage(rgbe_to_float(rgbe))


def _encode_rle_channel(values: np.ndarray) -> bytearray:
    out = bytearray()
    vals = values.tobytes()
    n = len(vals)
    i = 0
    while i < n:
        # look for the next run of at least 4 equal bytes
        j = i
        run_start, run_len = n, 0
        while j < n:
            k = j + 1
            while k < n and vals[k] == vals[j] and k - j < 127:
                k += 1
            if k - j >= 4:
                run_start, run_len = j, k - j
                break
            j = k
        while i < run_start:
            chunk = min(128, run_start - i)
            out.append(chunk)
            out += vals[i:i + chunk]
            i += chunk
        if run_len:
            out.append(128 + run_len)
            out.append(vals[run_start])
            i = run_start + run_len
    return out


def encode_radiance_hdr(img: HdrImage, rle: bool = True) -> bytes:
    """Encode ``img`` as a Radiance file (new-style RLE scanlines when possible)."""
    rgbe = float_to_rgbe(img.rgb)
    buf = bytearray(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n")
    buf += f"-Y {img.height} +X {img.width}\n".encode("ascii")
    use_rle = rle and _RLE_MIN_WIDTH <= img.width <= _RLE_MAX_WIDTH
    for row in rgbe:
        if not use_rle:
            buf += row.tobytes()
            continue
        buf += bytes((2, 2, img.width >> 8, img.width & 0xFF))
        for c in range(4):
            buf += _encode_rle_channel(row[:, c])
    return bytes(buf)


# ---------------------------------------------------------------------------
# PFM


def _pfm_tokens(data: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise HdrFormatError("PFM header is incomplete")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the samples
    if pos >= n:
        raise TruncationError("PFM has no sample data")
    return tokens, pos + 1


def load_pfm(data: bytes) -> HdrImage:
    """Decode a PFM byte string; grayscale ``Pf`` is replicated to three channels."""
    data = bytes(data)
    magic = data[:2]
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise HdrFormatError(f"bad PFM magic {magic!r}")
    if len(data) < 3 or not data[2:3].isspace():
        raise HdrFormatError("bad PFM magic line")
    try:
        (w_tok, h_tok, s_tok), pos = _pfm_tokens(data, 3, 2)
        width, height, scale = int(w_tok), int(h_tok), float(s_tok)
    except ValueError as exc:
        raise HdrFormatError(f"malformed PFM header: {exc}") from None
    if width < 1 or height < 1 or scale == 0:
        raise HdrFormatError("PFM dimensions must be positive and scale non-zero")

    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    count = width * height * channels
    if len(data) - pos != 4 * count:
        raise TruncationError(f"expected {count} samples, found {(len(data) - pos) / 4:g}")
    samples = np.frombuffer(data, dtype, count, pos).astype(np.float64)
    samples = samples.reshape(height, width, channels)[::-1]
    if channels == 1:
        samples = np.repeat(samples, 3, axis=2)
    samples = np.where(np.isnan(samples), 0.0, samples)
    return HdrImage(np.clip(samples, 0.0, None))


def encode_pfm(samples: np.ndarray, little_endian: bool = True) -> bytes:
    """Encode a (h, w) plane as ``Pf`` or a (h, w, 3) array as ``PF``; rows given top to bottom."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"cannot encode array of shape {arr.shape} as PFM")
    height, width = arr.shape[:2]
    dtype = "<f4" if little_endian else ">f4"
    header = magic + f"\n{width} {height}\n{-1.0 if little_endian else 1.0}\n".encode("ascii")
    return header + np.ascontiguousarray(arr[::-1], dtype=dtype).tobytes()


def load_hdr_file(path: str | os.PathLike) -> HdrImage:
    """Read ``path`` as Radiance or PFM, chosen by its signature."""
    data = Path(path).read_bytes()
    if data[:2] in (b"PF", b"Pf"):
        return load_pfm(data)
    return load_radiance_hdr(data)


# ---------------------------------------------------------------------------
# luminance and color


def extract_luminance(img: HdrImage, floor_ratio: float = DEFAULT_FLOOR_RATIO) -> np.ndarray:
    """Max-RGB luminance, floored at ``floor_ratio`` of the peak and normalized to peak 1."""
    if not 0 < floor_ratio < 1:
        raise ValueError("floor_ratio must lie in (0, 1)")
    y = img.rgb.max(axis=2)
    peak = y.max()
    if peak <= 0:
        raise DegenerateInputError("image is entirely black")
    return np.maximum(y, floor_ratio * peak) / peak


def recombine_color(img: HdrImage, y_in: np.ndarray, y_out: np.ndarray) -> LdrImage:
    """Scale each normalized input channel by the luminance gain ``y_out / y_in``."""
    y_in = np.asarray(y_in, dtype=np.float64)
    y_out = np.asarray(y_out, dtype=np.float64)
    if y_in.shape != img.rgb.shape[:2] or y_out.shape != y_in.shape:
        raise ValueError("luminance planes must match the image shape")
    peak = img.rgb.max()
    if peak <= 0:
        raise DegenerateInputError("image is entirely black")
    gain = y_out / y_in
    out = (img.rgb / peak) * gain[..., None]
    # channel <= y_in, so out <= y_out up to one rounding step
    return LdrImage(np.minimum(out, y_out[..., None]))


def encode_display(img: LdrImage, display_gamma: float = DEFAULT_DISPLAY_GAMMA) -> np.ndarray:
    """Gamma-encode to uint8: round(255 * v ** (1 / display_gamma)), halves rounded up."""
    if display_gamma <= 0:
        raise ValueError("display_gamma must be positive")
    codes = np.floor(255.0 * np.power(img.rgb, 1.0 / display_gamma) + 0.5)
    return np.clip(codes, 0, 255).astype(np.uint8)


def write_display(
    img: LdrImage, display_gamma: float = DEFAULT_DISPLAY_GAMMA, sink: PathOrSink = None
) -> bytes:
    """Encode ``img`` as an 8-bit RGB PNG, optionally writing it to a path or file object."""
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(encode_display(img, display_gamma)).save(buf, format="PNG")
    png = buf.getvalue()
    if sink is None:
        return png
    if hasattr(sink, "write"):
        sink.write(png)
    else:
        Path(sink).write_bytes(png)
    return png
