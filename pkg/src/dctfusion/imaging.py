"""Grayscale raster I/O.

Binary PGM (P5, maxval 255) is the native, bit-exact format.  PNG and JPEG
are accepted on input only and are converted to 8-bit luminance.
"""
from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


class ImageFormatError(ValueError):
    pass


def to_luminance(rgb: np.ndarray) -> np.ndarray:
    """Weighted R, G, B sum rounded half away from zero to uint8."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] < 3:
        raise ValueError(f"expected an (H, W, 3) colour image, got {rgb.shape}")
    y = rgb[..., 0] * LUMA_WEIGHTS[0] + rgb[..., 1] * LUMA_WEIGHTS[1] + rgb[..., 2] * LUMA_WEIGHTS[2]
    return np.floor(np.clip(y, 0, 255) + 0.5).astype(np.uint8)


def decode_pgm(data: bytes) -> np.ndarray:
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if not m:
            raise ImageFormatError("truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    magic, w, h, maxval = fields
    if magic != b"P5":
        raise ImageFormatError(f"not a binary PGM (magic {magic!r})")
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ImageFormatError("malformed PGM header") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid PGM dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"unsupported PGM maxval {maxval} (only 255)")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError("malformed PGM header")
    pos += 1
    n = width * height
    payload = data[pos:pos + n]
    if len(payload) != n:
        raise ImageFormatError(f"PGM raster truncated: expected {n} bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def encode_pgm(raster: np.ndarray) -> bytes:
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise ValueError(f"PGM output needs a 2-D raster, got shape {raster.shape}")
    if raster.dtype != np.uint8:
        if raster.size and (raster.min() < 0 or raster.max() > 255 or
                            not np.array_equal(raster, np.round(raster))):
            raise ValueError("raster samples must be integers in [0, 255]")
        raster = raster.astype(np.uint8)
    h, w = raster.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(raster).tobytes()


def load_image(path) -> np.ndarray:
    """Read a grayscale uint8 raster of shape ``(height, width)``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    data = path.read_bytes()
    if data[:2] == b"P5":
        return decode_pgm(data)
    if data[:1] == b"P":
        raise ImageFormatError(f"{path}: only binary PGM (P5) is supported among PNM formats")

    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8).copy()
            if im.mode in ("1", "P", "LA", "RGB", "RGBA", "CMYK", "YCbCr"):
                return to_luminance(np.asarray(im.convert("RGB")))
            raise ImageFormatError(f"{path}: unsupported image mode {im.mode}")
    except UnidentifiedImageError:
        raise ImageFormatError(f"{path}: unrecognised image format") from None


def atomic_write(path, payload: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def save_image(raster: np.ndarray, path) -> None:
    atomic_write(path, encode_pgm(raster))
