"""Grayscale image loading, saving, and geometry primitives.

Images are plain 2-D numpy arrays of dtype uint8, indexed [row, col]
(so x is the column index and y is the row index). All resampling in
this module is bilinear with half-pixel-centered coordinate mapping,
and integer outputs are rounded half-up and clamped to [0, 255].
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

MAX_LEVEL = 255


class PgmError(ValueError):
    """Raised for malformed or unsupported PGM input."""


def as_gray(img: np.ndarray) -> np.ndarray:
    """Validate an array as a grayscale image and return it as uint8.

    Accepts any 2-D array whose values already fit in [0, 255]; the
    returned array is uint8 and C-contiguous.
    """
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("empty image")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > MAX_LEVEL:
            raise ValueError("pixel values outside [0, 255]")
        arr = arr.astype(np.uint8)
    return np.ascontiguousarray(arr)


def _read_header_token(data: bytes, pos: int) -> Tuple[bytes, int]:
    # Skips whitespace and '#' comments, returns (token, next position).
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise PgmError("truncated PGM header")
    return data[start:pos], pos


def load_pgm(path: str | Path) -> np.ndarray:
    """Load a binary (P5) PGM file.

    Parameters
    ----------
    path : str or Path
        File to read.

    Returns
    -------
    numpy.ndarray
        Image as a (height, width) uint8 array.

    Raises
    ------
    FileNotFoundError
        If the file does not exist.
    PgmError
        If the file is not a P5 PGM, the header is malformed, the
        maxval exceeds 255, or the raster is truncated.
    """
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise PgmError(f"unsupported PNM magic {data[:2]!r}, only binary P5 is handled")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_header_token(data, pos)
        if not tok.isdigit():
            raise PgmError(f"malformed PGM header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PgmError(f"bad PGM dimensions {width}x{height}")
    if maxval > MAX_LEVEL:
        raise PgmError(f"maxval {maxval} above 255 is not supported")
    if maxval <= 0:
        raise PgmError(f"bad PGM maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos : pos + width * height]
    if len(raster) < width * height:
        raise PgmError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def save_pgm(path: str | Path, img: np.ndarray) -> None:
    """Write a binary (P5) PGM file with maxval 255.

    The file is written atomically: the raster goes to a temporary
    file in the destination directory which is then renamed over the
    target path.
    """
    arr = as_gray(img)
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{MAX_LEVEL}\n".encode("ascii")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".pgm.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(arr.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sample_bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear sample at float coordinates with edge replication.

    Coordinates are pixel-centered: (0, 0) is the center of the
    top-left pixel. Samples outside the image clamp to the border.
    Returns float64 values.
    """
    h, w = img.shape
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    f = img.astype(np.float64)
    v00 = f[y0c, x0c]
    v01 = f[y0c, x1c]
    v10 = f[y1c, x0c]
    v11 = f[y1c, x1c]
    top = v00 + fx * (v01 - v00)
    bot = v10 + fx * (v11 - v10)
    return top + fy * (bot - top)


def _quantize_levels(values: np.ndarray) -> np.ndarray:
    # Round half-up and clamp to the 8-bit range.
    return np.clip(np.floor(values + 0.5), 0, MAX_LEVEL).astype(np.uint8)


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resize with bilinear interpolation.

    Sample positions use the half-pixel-centered mapping
    src = (dst + 0.5) * (src_size / dst_size) - 0.5, so resizing to
    the input dimensions is an exact identity.
    """
    arr = as_gray(img)
    if out_w < 1 or out_h < 1:
        raise ValueError(f"bad output size {out_w}x{out_h}")
    h, w = arr.shape
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return _quantize_levels(_sample_bilinear(arr, gx, gy))


def _rotate_with_mask(
    img: np.ndarray, angle_deg: float, fill: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Rotate about the image center; also report which output pixels
    sampled inside the source (False marks fill pixels)."""
    arr = as_gray(img)
    h, w = arr.shape
    theta = np.deg2rad(angle_deg)
    c, s = np.cos(theta), np.sin(theta)
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    gx, gy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    dx = gx - cx
    dy = gy - cy
    # Inverse map: rotate output coordinates by -angle to find sources.
    sx = c * dx + s * dy + cx
    sy = -s * dx + c * dy + cy
    inside = (sx >= -0.5) & (sx <= w - 0.5) & (sy >= -0.5) & (sy <= h - 0.5)
    out = _quantize_levels(_sample_bilinear(arr, sx, sy))
    out[~inside] = fill
    return out, inside


def rotate(img: np.ndarray, angle_deg: float, fill: int = 0) -> np.ndarray:
    """Rotate an image about its center, keeping the same dimensions.

    Output pixels whose source falls outside the image take the fill
    value. Positive angles rotate content in the +x-toward-+y sense.
    """
    if not 0 <= fill <= MAX_LEVEL:
        raise ValueError(f"fill {fill} outside [0, 255]")
    out, _ = _rotate_with_mask(img, angle_deg, fill)
    return out


def crop_center(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Crop the centered out_w x out_h window.

    For even residuals the window is biased toward the top-left, i.e.
    the offsets are floor((size - out) / 2).
    """
    arr = as_gray(img)
    h, w = arr.shape
    if out_w < 1 or out_h < 1 or out_w > w or out_h > h:
        raise ValueError(f"cannot crop {out_w}x{out_h} from {w}x{h}")
    x0 = (w - out_w) // 2
    y0 = (h - out_h) // 2
    return arr[y0 : y0 + out_h, x0 : x0 + out_w].copy()


def std_dev(img: np.ndarray) -> float:
    """Population standard deviation of pixel values.

    Computed from exact integer sums, so repeated calls are
    bit-identical.
    """
    arr = as_gray(img)
    n = arr.size
    s1 = int(arr.sum(dtype=np.int64))
    s2 = int((arr.astype(np.int64) ** 2).sum(dtype=np.int64))
    var = s2 / n - (s1 / n) ** 2
    return float(np.sqrt(max(var, 0.0)))
