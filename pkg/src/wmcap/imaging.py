"""8-bit grayscale image I/O and disjoint pixel-pair partitioning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_LEVEL = 255  # 8-bit intensity ceiling; everything downstream assumes it

PAIRING_POLICIES = ("horizontal", "vertical")


class PgmError(ValueError):
    """Raised for malformed or unsupported PGM input."""


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image; ``data`` is a (height, width) uint8 array."""

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        arr = np.asarray(self.data, dtype=np.uint8).reshape(self.height, self.width)
        object.__setattr__(self, "data", arr)

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def __eq__(self, other):
        return (
            isinstance(other, GrayImage)
            and self.width == other.width
            and self.height == other.height
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True)
class PairSequence:
    """Disjoint pixel pairs in deterministic order.

    ``pairs`` is an (N, 2) uint8 array of (x, y) intensities.  ``residuals``
    holds the unpaired trailing pixels (odd width/height) so the original
    image can be rebuilt bit-exactly.
    """

    pairs: np.ndarray
    pairing: str
    width: int
    height: int
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8))

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_residual(self) -> int:
        return len(self.residuals)

    @property
    def origin(self) -> tuple[int, int, int]:
        return (self.width, self.height, self.n_residual)


def _read_header_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    # Whitespace-delimited token; '#' starts a comment running to end of line.
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PgmError(f"truncated PGM header at byte {start}")
    return buf[start:pos], pos


def load_pgm(path) -> GrayImage:
    """Read a binary (P5) PGM file with maxval 255.

    Header comments are tolerated.  Anything other than an 8-bit P5 file is
    rejected rather than rescaled.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] != b"P5":
        raise PgmError("not a binary PGM: expected magic 'P5' at byte 0")
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _read_header_token(buf, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise PgmError(f"non-numeric PGM header field {token!r} at byte {pos}") from None
    width, height, maxval = fields
    if maxval != 255:
        raise PgmError(f"unsupported PGM maxval {maxval}: only 8-bit (255) images are handled")
    if width <= 0 or height <= 0:
        raise PgmError(f"bad PGM dimensions {width}x{height}")
    pos += 1  # single whitespace byte after maxval per the format
    expected = width * height
    raster = buf[pos : pos + expected]
    if len(raster) < expected:
        raise PgmError(
            f"PGM raster truncated at byte {pos + len(raster)}: "
            f"expected {expected} pixels, got {len(raster)}"
        )
    data = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(width, height, data.copy())


def save_pgm(img: GrayImage, path) -> None:
    """Write a binary (P5) PGM file with maxval 255."""
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.width, img.height))
        fh.write(img.data.tobytes())


def partition_pairs(img: GrayImage, policy: str = "horizontal") -> PairSequence:
    """Split an image into disjoint adjacent pixel pairs.

    horizontal: (row r, col 2c) with (row r, col 2c+1), row-major; an odd
    trailing column is carried as residual pixels.  vertical: (2r, c) with
    (2r+1, c), scanning pair-rows top to bottom; an odd trailing row is the
    residual.
    """
    if policy not in PAIRING_POLICIES:
        raise ValueError(f"unknown pairing policy {policy!r}")
    d = img.data
    if policy == "horizontal":
        w2 = img.width // 2
        body = d[:, : 2 * w2].reshape(img.height, w2, 2)
        pairs = body.reshape(-1, 2)
        residuals = d[:, -1].copy() if img.width % 2 else np.zeros(0, np.uint8)
    else:
        h2 = img.height // 2
        body = d[: 2 * h2, :].reshape(h2, 2, img.width)
        pairs = np.stack([body[:, 0, :], body[:, 1, :]], axis=-1).reshape(-1, 2)
        residuals = d[-1, :].copy() if img.height % 2 else np.zeros(0, np.uint8)
    return PairSequence(np.ascontiguousarray(pairs), policy, img.width, img.height, residuals)


def reconstruct_image(pairs: PairSequence, residual_pixels=None) -> GrayImage:
    """Inverse of :func:`partition_pairs`; bit-exact for unmodified pairs."""
    residuals = pairs.residuals if residual_pixels is None else np.asarray(residual_pixels, np.uint8)
    if len(residuals) != pairs.n_residual:
        raise ValueError(
            f"residual length {len(residuals)} does not match partition origin {pairs.n_residual}"
        )
    w, h = pairs.width, pairs.height
    p = np.asarray(pairs.pairs, dtype=np.uint8)
    out = np.empty((h, w), dtype=np.uint8)
    if pairs.pairing == "horizontal":
        w2 = w // 2
        if len(p) != w2 * h:
            raise ValueError("pair count inconsistent with image dimensions")
        out[:, : 2 * w2] = p.reshape(h, w2, 2).reshape(h, 2 * w2)
        if w % 2:
            out[:, -1] = residuals
    else:
        h2 = h // 2
        if len(p) != h2 * w:
            raise ValueError("pair count inconsistent with image dimensions")
        body = p.reshape(h2, w, 2)
        out[0 : 2 * h2 : 2, :] = body[:, :, 0]
        out[1 : 2 * h2 : 2, :] = body[:, :, 1]
        if h % 2:
            out[-1, :] = residuals
    return GrayImage(w, h, out)
