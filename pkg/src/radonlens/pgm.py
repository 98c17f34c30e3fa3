"""PGM (netpbm P2/P5) reading and writing.

The only image format the toolkit speaks.  Byte-level layout is documented
in docs/formats.md.  Loading scales intensities to [0, 1] by the header
maxval; saving quantizes with round-half-up so golden files are bit
reproducible.
"""

from __future__ import annotations

import numpy as np

from radonlens.errors import FormatError, ParseError, ValidationError
from radonlens.image import ImageGrid

_MAXVALS = {8: 255, 16: 65535}


class _HeaderScanner:
    """Whitespace/comment-aware tokenizer that tracks byte offsets."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def _skip_separators(self):
        while self.pos < len(self.buf):
            ch = self.buf[self.pos : self.pos + 1]
            if ch.isspace():
                self.pos += 1
            elif ch == b"#":
                nl = self.buf.find(b"\n", self.pos)
                self.pos = len(self.buf) if nl < 0 else nl + 1
            else:
                return

    def token(self) -> bytes:
        self._skip_separators()
        start = self.pos
        while self.pos < len(self.buf) and not self.buf[self.pos : self.pos + 1].isspace():
            self.pos += 1
        if self.pos == start:
            raise ParseError("unexpected end of header", offset=start)
        return self.buf[start : self.pos]

    def int_token(self, what: str) -> int:
        start_after_sep = self.pos
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected integer for {what}, got {tok!r}",
                             offset=start_after_sep) from None


def load_image(path) -> ImageGrid:
    """Read a P2 (ASCII) or P5 (binary) grayscale PGM, scaled to [0, 1]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 2:
        raise ParseError("file too short for a PGM header", offset=0)
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"unsupported magic {magic!r}; only P2/P5 grayscale PGM is handled")
    sc = _HeaderScanner(buf)
    sc.pos = 2
    width = sc.int_token("width")
    height = sc.int_token("height")
    maxval = sc.int_token("maxval")
    if width < 1 or height < 1:
        raise ParseError(f"invalid dimensions {width}x{height}", offset=2)
    if not (0 < maxval < 65536):
        raise ParseError(f"maxval {maxval} outside (0, 65536)", offset=2)

    n = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if sc.pos >= len(buf) or not buf[sc.pos : sc.pos + 1].isspace():
            raise ParseError("missing whitespace before binary raster", offset=sc.pos)
        sc.pos += 1
        itemsize = 1 if maxval < 256 else 2
        need = n * itemsize
        raster = buf[sc.pos : sc.pos + need]
        if len(raster) != need:
            raise ParseError(
                f"raster truncated: need {need} bytes, have {len(raster)}", offset=sc.pos
            )
        dtype = np.uint8 if itemsize == 1 else np.dtype(">u2")
        values = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    else:
        values = np.empty(n, dtype=np.float64)
        for idx in range(n):
            values[idx] = sc.int_token(f"pixel {idx}")
    if values.max(initial=0.0) > maxval:
        raise ParseError(f"pixel value exceeds maxval {maxval}", offset=sc.pos)
    data = values.reshape(height, width) / float(maxval)
    return ImageGrid(data)


def save_image(img: ImageGrid, path, depth: int = 8, clamp: bool = False,
               ascii_format: bool = False) -> None:
    """Write a PGM at 8 or 16 bits: binary P5, or ASCII P2 on request.

    Intensities must already be in [0, 1]; out-of-range values raise
    unless ``clamp`` is set.  Quantization is round-half-up:
    ``floor(v * maxval + 0.5)``.
    """
    if depth not in _MAXVALS:
        raise ValidationError(f"depth must be 8 or 16, got {depth}")
    data = img.data
    if clamp:
        data = np.clip(data, 0.0, 1.0)
    elif data.min() < 0.0 or data.max() > 1.0:
        raise ValidationError(
            f"intensities outside [0, 1] (min {data.min():.4g}, max {data.max():.4g}); "
            "pass clamp=True to clip"
        )
    maxval = _MAXVALS[depth]
    q = np.floor(data * maxval + 0.5).astype(np.uint32)
    with open(path, "wb") as fh:
        if ascii_format:
            fh.write(f"P2\n{img.width} {img.height}\n{maxval}\n".encode("ascii"))
            for row in q:
                fh.write(" ".join(str(v) for v in row).encode("ascii") + b"\n")
        else:
            fh.write(f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii"))
            raster = q.astype(np.uint8) if depth == 8 else q.astype(">u2")
            fh.write(raster.tobytes())
