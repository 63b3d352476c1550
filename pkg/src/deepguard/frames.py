"""Frames are float64 arrays of shape (C, H, W) with intensities in [0, 1]."""
from pathlib import Path

import numpy as np

from .errors import DataError, DimensionError, ParseError


def validate_frame(frame, shape=None):
    a = np.asarray(frame, dtype=np.float64)
    if a.ndim != 3:
        raise DimensionError(f"frame must be (C, H, W), got shape {a.shape}")
    if shape is not None and a.shape != tuple(shape):
        raise DimensionError(f"frame shape {a.shape} != expected {tuple(shape)}")
    if a.size and (a.min() < 0.0 or a.max() > 1.0 or not np.all(np.isfinite(a))):
        raise DataError("frame intensities must lie in [0, 1]")
    return a


def write_pgm(path, frame):
    """Write a single-channel frame as binary PGM (P5, maxval 255)."""
    a = np.asarray(frame, dtype=np.float64)
    if a.ndim == 3:
        if a.shape[0] != 1:
            raise DimensionError("PGM holds one channel only")
        a = a[0]
    h, w = a.shape
    data = np.clip(np.rint(a * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path):
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    # header: magic, width, height, maxval; '#' comments allowed
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise ParseError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ParseError(f"{path}: bad PGM header") from exc
    if maxval != 255:
        raise ParseError(f"{path}: only maxval 255 is supported")
    pos += 1
    body = raw[pos:pos + w * h]
    if len(body) != w * h:
        raise ParseError(f"{path}: truncated PGM data")
    return (np.frombuffer(body, dtype=np.uint8).reshape(1, h, w) / 255.0)
