"""Minimal PGM/PPM readers and writers (ASCII and binary variants)."""
from __future__ import annotations

import numpy as np

from .model import ModelError


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ModelError("truncated image header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    return tokens, pos + 1


def read_image(path) -> np.ndarray:
    """Grayscale (H, W) array from PGM, or (H, W, 3) from PPM."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise ModelError(f"unsupported image magic {magic!r}")
    tokens, offset = _header_tokens(data, 4)
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels
    if magic in (b"P2", b"P3"):
        values = data[offset - 1 :].split()
        if len(values) != count:
            raise ModelError("ASCII image has the wrong sample count")
        arr = np.array([int(v) for v in values], dtype=np.int64)
    else:
        if maxval > 255:
            raw = np.frombuffer(data, dtype=">u2", count=count, offset=offset)
        else:
            raw = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset)
        if raw.size != count:
            raise ModelError("binary image has the wrong sample count")
        arr = raw.astype(np.int64)
    if channels == 3:
        return arr.reshape(height, width, 3)
    return arr.reshape(height, width)


def write_pgm(path, image, *, binary: bool = True, maxval: int = 255) -> None:
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise ModelError("PGM output needs a 2-D grayscale array")
    if arr.min() < 0 or arr.max() > maxval:
        raise ModelError("pixel values outside [0, maxval]")
    h, w = arr.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
            fh.write(arr.astype(np.uint8 if maxval <= 255 else ">u2").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"P2\n{w} {h}\n{maxval}\n")
            for row in arr:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")


def write_ppm(path, image, *, maxval: int = 255) -> None:
    """ASCII (P3) color writer; one pixel per line for a stable byte layout."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ModelError("PPM output needs an (H, W, 3) array")
    if arr.min() < 0 or arr.max() > maxval:
        raise ModelError("pixel values outside [0, maxval]")
    h, w, _ = arr.shape
    with open(path, "w") as fh:
        fh.write(f"P3\n{w} {h}\n{maxval}\n")
        for row in arr:
            for px in row:
                fh.write(f"{int(px[0])} {int(px[1])} {int(px[2])}\n")
