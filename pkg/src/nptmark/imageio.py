"""Grayscale image files: binary PGM (P5), PNG and float64 ``.npy``.

Pixels live in [0, 1] in memory.  8-bit formats map byte v to v/255 on
load and quantise with round(255*v), clamped, on save.  ``.npy`` keeps the
exact float64 values and is the format to use for watermarked images that
will be extracted later, since 8-bit quantisation is itself an attack.

Colour PNGs are reduced to luma with 0.299 R + 0.587 G + 0.114 B.
"""

from __future__ import annotations

import io
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ImageFormatError

LUMA = (0.299, 0.587, 0.114)
_WHITESPACE = b" \t\r\n\x0b\x0c"
_UMASK = os.umask(0)
os.umask(_UMASK)


def _pgm_header(data: bytes):
    pos = 0
    tokens = []
    while len(tokens) < 4:
        while pos < len(data) and data[pos] in _WHITESPACE:
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise ImageFormatError("PGM header ends inside a comment")
            pos = end + 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in _WHITESPACE and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise ImageFormatError("PGM header must end with a single whitespace byte")
    return tokens, pos + 1


def decode_pgm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P5"):
        raise ImageFormatError("only binary PGM (P5) is supported")
    tokens, offset = _pgm_header(data)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError("malformed PGM header") from None
    if width < 1 or height < 1:
        raise ImageFormatError("PGM dimensions must be positive")
    if maxval != 255:
        raise ImageFormatError(f"PGM maxval must be 255, got {maxval}")
    pixels = data[offset : offset + width * height]
    if len(pixels) != width * height:
        raise ImageFormatError("PGM pixel data is truncated")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width) / 255.0


def quantize8(image) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    return np.clip(np.floor(image * 255.0 + 0.5), 0, 255).astype(np.uint8)


def encode_pgm(image) -> bytes:
    q = quantize8(image)
    if q.ndim != 2:
        raise ImageFormatError("PGM holds 2-D grayscale images only")
    return b"P5\n%d %d\n255\n" % (q.shape[1], q.shape[0]) + q.tobytes()


def _decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        mode = im.mode
        if mode in ("L", "LA"):
            return np.asarray(im.getchannel(0), dtype=float) / 255.0
        if mode == "1":
            return np.asarray(im.convert("L"), dtype=float) / 255.0
        if mode in ("RGB", "RGBA", "P"):
            rgb = np.asarray(im.convert("RGB"), dtype=float) / 255.0
            return rgb @ np.array(LUMA)
    raise ImageFormatError(f"unsupported PNG mode {mode!r}; expected 8-bit gray or RGB")


def _encode_png(image) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(quantize8(image), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def _encode_npy(image) -> bytes:
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(image, dtype="<f8"), allow_pickle=False)
    return buf.getvalue()


def load_gray(path) -> np.ndarray:
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"cannot read {path}: {exc}") from None
    if suffix in (".pgm", ".pnm"):
        return decode_pgm(data)
    if suffix == ".png":
        return _decode_png(data)
    if suffix == ".npy":
        arr = np.load(io.BytesIO(data), allow_pickle=False)
        if arr.ndim != 2:
            raise ImageFormatError(f"{path}: expected a 2-D array, got shape {arr.shape}")
        return arr.astype(float)
    raise ImageFormatError(f"unsupported image format {suffix!r} (use .pgm, .png or .npy)")


def encode_gray(image, suffix: str) -> bytes:
    suffix = suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return encode_pgm(image)
    if suffix == ".png":
        return _encode_png(image)
    if suffix == ".npy":
        return _encode_npy(image)
    raise ImageFormatError(f"unsupported image format {suffix!r} (use .pgm, .png or .npy)")


def save_gray(image, path) -> None:
    path = Path(path)
    with atomic_outputs() as out:
        out.add(path, encode_gray(image, path.suffix))


class _Staging:
    def __init__(self):
        self.pending: dict[Path, bytes] = {}

    def add(self, path, payload: bytes | str) -> None:
        if isinstance(payload, str):
            payload = payload.encode("utf-8")
        self.pending[Path(path)] = payload


@contextmanager
def atomic_outputs():
    """Collect output files and publish them only if the block succeeds.

    Every file is first written to a temporary sibling, then all are renamed
    into place, so an error never leaves a partial set of outputs behind.
    """
    staging = _Staging()
    yield staging
    temps = []
    try:
        for path, payload in staging.pending.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
            temps.append((tmp, path))
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.chmod(tmp, 0o666 & ~_UMASK)
        for tmp, path in temps:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
