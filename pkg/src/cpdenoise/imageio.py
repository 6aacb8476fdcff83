"""8-bit grayscale image files: binary PGM (P5), plus PNG when Pillow is present."""

from __future__ import annotations

import os

import numpy as np

from .core import CpdeError


class ImageFormatError(CpdeError, ValueError):
    pass


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ImageFormatError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_pgm(data: bytes) -> np.ndarray:
    tokens, offset = _tokens(data, 4)
    if tokens[0] != b"P5":
        raise ImageFormatError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError(f"bad PGM header: {exc}") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"bad PGM dimensions {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 is supported, got {maxval}")
    raster = data[offset:offset + width * height]
    if len(raster) != width * height:
        raise ImageFormatError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).astype(np.float64)


def to_uint8(field: np.ndarray) -> np.ndarray:
    """Round to nearest and clamp to [0, 255]."""
    return np.clip(np.rint(field), 0, 255).astype(np.uint8)


def encode_pgm(field: np.ndarray) -> bytes:
    pixels = to_uint8(field)
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + pixels.tobytes()


def _is_png(path) -> bool:
    return os.fspath(path).lower().endswith(".png")


def load_image(path) -> np.ndarray:
    """Load an 8-bit grayscale image as a float64 field."""
    if _is_png(path):
        from PIL import Image  # optional dependency

        with Image.open(path) as im:
            if im.mode not in ("L", "P", "1"):
                raise ImageFormatError(f"{path}: expected grayscale PNG, got mode {im.mode}")
            return np.asarray(im.convert("L"), dtype=np.float64)
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def save_image(path, field: np.ndarray) -> None:
    if _is_png(path):
        from PIL import Image

        Image.fromarray(to_uint8(field)).save(path)
        return
    with open(path, "wb") as fh:
        fh.write(encode_pgm(field))
