"""Grayscale image I/O (PNG via Pillow, PGM by hand).

Images are float64 arrays in [0, 1].  Saving quantizes to 8 or 16 bits;
loading a file written at the same depth returns exactly the quantized
values.  Colour inputs are reduced with BT.601 luma weights
(0.299 R + 0.587 G + 0.114 B).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptFile, IoFailure, UnsupportedFormat

BT601 = np.array([0.299, 0.587, 0.114])
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _format_of(path: Path, head: bytes | None = None) -> str:
    if head is not None:
        if head.startswith(PNG_MAGIC):
            return "png"
        if head[:2] in (b"P5", b"P2"):
            return "pgm"
    suffix = path.suffix.lower()
    if suffix == ".png":
        return "png"
    if suffix in (".pgm", ".pnm"):
        return "pgm"
    raise UnsupportedFormat(f"{path}: only PNG and PGM are supported")


# -- PGM ---------------------------------------------------------------------
_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_pgm(raw: bytes, path) -> np.ndarray:
    magic = raw[:2]
    pos = 2
    fields = []
    for _ in range(3):
        m = _TOKEN.match(raw, pos)
        if not m:
            raise CorruptFile(f"{path}: truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise CorruptFile(f"{path}: bad PGM header") from exc
    if not (0 < maxval < 65536 and width > 0 and height > 0):
        raise CorruptFile(f"{path}: bad PGM header values")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        body = raw[pos:]
        if len(body) < count * dtype.itemsize:
            raise CorruptFile(f"{path}: truncated PGM data")
        data = np.frombuffer(body, dtype=dtype, count=count)
    else:
        values = raw[pos:].split()
        if len(values) < count:
            raise CorruptFile(f"{path}: truncated PGM data")
        data = np.array([int(v) for v in values[:count]])
    return data.reshape(height, width).astype(np.float64) / maxval


def _write_pgm(q: np.ndarray, bits: int, fh) -> None:
    maxval = (1 << bits) - 1
    fh.write(f"P5\n{q.shape[1]} {q.shape[0]}\n{maxval}\n".encode("ascii"))
    fh.write(q.astype(">u2" if bits == 16 else np.uint8).tobytes())


# -- PNG ---------------------------------------------------------------------
def _read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                return np.asarray(im, dtype=np.float64) / 65535.0
            if mode == "L":
                return np.asarray(im, dtype=np.float64) / 255.0
            if mode in ("1", "P", "LA", "RGBA", "RGB", "PA"):
                if mode in ("1", "LA") or (mode == "P" and im.palette is None):
                    return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                return rgb @ BT601
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    raise UnsupportedFormat(f"{path}: PNG mode {mode} not supported")


def load_image(path) -> np.ndarray:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    fmt = _format_of(path, raw[:8])
    if fmt == "pgm":
        if raw[:2] not in (b"P5", b"P2"):
            raise CorruptFile(f"{path}: not a PGM file")
        return _read_pgm(raw, path)
    if not raw.startswith(PNG_MAGIC):
        raise CorruptFile(f"{path}: not a PNG file")
    return _read_png(path)


def quantize_image(img, bits: int = 8) -> np.ndarray:
    if bits not in (8, 16):
        raise UnsupportedFormat("bit depth must be 8 or 16")
    maxval = (1 << bits) - 1
    return np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * maxval).astype(
        np.uint16 if bits == 16 else np.uint8
    )


def save_image(img, path, bits: int = 8) -> None:
    """Write a [0, 1] image; values are clipped and rounded to ``bits``."""
    path = Path(path)
    fmt = _format_of(path)
    q = quantize_image(img, bits)
    try:
        if fmt == "pgm":
            with open(path, "wb") as fh:
                _write_pgm(q, bits, fh)
        else:
            Image.fromarray(q).save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def save_rgb(img, path) -> None:
    """Write an (h, w, 3) [0, 1] image as 8-bit RGB PNG."""
    q = np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255).astype(np.uint8)
    try:
        Image.fromarray(q).save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
