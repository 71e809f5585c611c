"""Reader for portable graymap and pixmap files (P2, P3, P5, P6).

Follows the Netpbm format description: whitespace separated header fields,
``#`` comments running to the end of a line, exactly one whitespace byte
between the maxval and a binary raster, and big-endian 16-bit samples when
maxval exceeds 255. Only the first image of a multi-image file is read.
"""

from __future__ import annotations

import os
import re

import numpy as np

_WHITESPACE = b" \t\n\r\v\f"
_TOKEN = re.compile(rb"#[^\n]*|([^\s#]+)")
_MAGIC = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}


class NetpbmError(ValueError):
    def __init__(self, path, offset, message):
        super().__init__(f"{path}: byte {offset}: {message}")
        self.path = path
        self.offset = offset


class _Cursor:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def error(self, message, offset=None):
        return NetpbmError(self.path, self.pos if offset is None else offset, message)

    def skip_space(self):
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos : self.pos + 1]
            if ch == b"#":
                end = data.find(b"\n", self.pos)
                self.pos = n if end < 0 else end + 1
            elif ch in _WHITESPACE:
                self.pos += 1
            else:
                break

    def token(self, what: str) -> bytes:
        self.skip_space()
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos : self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        if self.pos == start:
            raise self.error(f"unexpected end of file while reading {what}")
        return data[start : self.pos]

    def integer(self, what: str) -> int:
        start = self.pos
        tok = self.token(what)
        if not tok.isdigit():
            raise self.error(f"expected an unsigned integer for {what}, got {tok[:16]!r}", start)
        return int(tok)


def decode_netpbm(data: bytes, path="<bytes>") -> tuple[np.ndarray, int]:
    """Decode P2/P3/P5/P6 bytes into ``(pixels, maxval)``.

    ``pixels`` has shape ``(height, width)`` for graymaps and
    ``(height, width, 3)`` for pixmaps, dtype ``uint16``.
    """
    cur = _Cursor(data, path)
    magic = data[:2]
    if magic not in _MAGIC:
        raise cur.error(f"unsupported magic number {magic!r}")
    channels, binary = _MAGIC[magic]
    cur.pos = 2
    width = cur.integer("width")
    height = cur.integer("height")
    maxval = cur.integer("maxval")
    if width == 0 or height == 0:
        raise cur.error(f"empty image ({width}x{height})")
    if not 0 < maxval < 65536:
        raise cur.error(f"maxval {maxval} outside 1..65535")
    count = width * height * channels
    if binary:
        if cur.pos >= len(data) or data[cur.pos : cur.pos + 1] not in _WHITESPACE:
            raise cur.error("missing whitespace after maxval")
        start = cur.pos + 1
        width_bytes = 1 if maxval < 256 else 2
        need = count * width_bytes
        raster = data[start : start + need]
        if len(raster) < need:
            raise NetpbmError(path, start + len(raster), f"raster truncated: need {need} bytes, got {len(raster)}")
        dtype = np.uint8 if width_bytes == 1 else np.dtype(">u2")
        values = np.frombuffer(raster, dtype=dtype).astype(np.uint16)
    else:
        values = np.empty(count, dtype=np.uint16)
        i = 0
        for m in _TOKEN.finditer(data, cur.pos):
            tok = m.group(1)
            if tok is None:
                continue
            if i == count:
                break
            if not tok.isdigit():
                raise cur.error(f"expected a sample value, got {tok[:16]!r}", m.start())
            v = int(tok)
            if v > maxval:
                raise cur.error(f"sample {i} = {v} exceeds maxval {maxval}", m.start())
            values[i] = v
            i += 1
        if i < count:
            raise cur.error(f"raster truncated: need {count} samples, got {i}", len(data))
    if int(values.max(initial=0)) > maxval:
        bad = int(np.argmax(values > maxval))
        raise cur.error(f"sample {bad} exceeds maxval {maxval}")
    shape = (height, width) if channels == 1 else (height, width, 3)
    return values.reshape(shape), maxval


def read_netpbm(path: str | os.PathLike) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        return decode_netpbm(fh.read(), os.fspath(path))


def encode_netpbm(pixels, maxval: int = 255, binary: bool = True) -> bytes:
    """Encode a gray ``(h, w)`` or RGB ``(h, w, 3)`` array."""
    px = np.asarray(pixels)
    if px.ndim == 2:
        magic = b"P5" if binary else b"P2"
    elif px.ndim == 3 and px.shape[2] == 3:
        magic = b"P6" if binary else b"P3"
    else:
        raise ValueError(f"cannot encode array of shape {px.shape}")
    h, w = px.shape[:2]
    header = magic + f"\n{w} {h}\n{maxval}\n".encode()
    flat = px.reshape(-1).astype(np.int64)
    if binary:
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        return header + flat.astype(dtype).tobytes()
    return header + " ".join(str(v) for v in flat).encode() + b"\n"
