"""Integral tables for constant-time axis-aligned and diagonal region sums.

Two table families are built per weight kind:

* ``Sat`` is the usual summed-area table: ``cell(x, y)`` holds the sum
  of ``w(i, j) * I(i, j)`` over ``i <= x, j <= y``, with a virtual zero
  row/column at index -1. Axis-aligned window sums are four lookups.

* ``Rsat`` answers sums over 45-degree shapes. Internally it is stored
  in rotated coordinates ``u = x + y``, ``v = x - y`` as the quadrant
  prefix ``H(u, v) = sum over pixels with i + j <= u and i - j >= v``.
  The classic down-pointing triangle with right-angle apex at (x, y)
  is the cell view ``H(x + y, x - y)``; a closed l1 ball (diamond) is
  an axis-aligned box in (u, v) space, so its sum is four lookups with
  the off-parity corners landing between triangle apexes. Storing H on
  the full (u, v) integer grid is what makes those four lookups exact
  for every center and radius.

Weights use 1-based pixel coordinates: ``x_weighted`` accumulates
``(x + 1) * I``, ``y_weighted`` accumulates ``(y + 1) * I`` and
``squared`` accumulates ``I * I``. Cells are 64-bit signed integers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from .image_io import as_gray

Index = Union[int, np.ndarray]


class WeightKind(enum.Enum):
    PLAIN = "plain"
    X_WEIGHTED = "x_weighted"
    Y_WEIGHTED = "y_weighted"
    SQUARED = "squared"


def weight_map(img: np.ndarray, kind: WeightKind) -> np.ndarray:
    """The per-pixel accumulated quantity w(i, j) * I(i, j) as int64."""
    arr = as_gray(img).astype(np.int64)
    h, w = arr.shape
    if kind is WeightKind.PLAIN:
        return arr
    if kind is WeightKind.X_WEIGHTED:
        return arr * (np.arange(1, w + 1, dtype=np.int64)[None, :])
    if kind is WeightKind.Y_WEIGHTED:
        return arr * (np.arange(1, h + 1, dtype=np.int64)[:, None])
    if kind is WeightKind.SQUARED:
        return arr * arr
    raise ValueError(f"unknown weight kind {kind!r}")


def _check_overflow(w: int, h: int) -> None:
    # Worst cell magnitude: 255 * max_weight * pixel_count.
    bound = 255 * max(w, h) * w * h
    if bound >= 2**62:
        raise ValueError(f"image {w}x{h} too large for 64-bit integral cells")


@dataclass
class Sat:
    """Summed-area table for one weight kind.

    ``cells`` is stored padded with a zero row and column so that the
    virtual -1 index needs no branching: cell(x, y) == cells[y+1, x+1].
    """

    width: int
    height: int
    kind: WeightKind
    cells: np.ndarray

    def cell(self, x: Index, y: Index) -> Index:
        """Prefix sum over i <= x, j <= y (zero when x or y is -1)."""
        return self.cells[np.add(y, 1), np.add(x, 1)]


@dataclass
class Rsat:
    """Diagonal (rotated) prefix table for one weight kind.

    ``table[u + 1, v + height - 1]`` holds H(u, v) as defined in the
    module docstring, for u in [-1, w+h-2] and v in [-(h-1), w]. The
    extra row/column of zeros lets every diamond corner lookup stay
    inside the table without per-query branching.
    """

    width: int
    height: int
    kind: WeightKind
    max_radius: int
    table: np.ndarray

    def _h(self, u: Index, v: Index) -> Index:
        return self.table[np.add(u, 1), np.add(v, self.height - 1)]

    def cell(self, x: Index, y: Index) -> Index:
        """Sum over the triangle {(i, j): j <= y - |i - x|} clipped to
        the image: the down-pointing right-angle apex at (x, y)."""
        return self._h(np.add(x, y), np.subtract(x, y))


def build_sat(img: np.ndarray, kind: WeightKind) -> Sat:
    """Build the summed-area table of one weight kind."""
    arr = as_gray(img)
    h, w = arr.shape
    _check_overflow(w, h)
    cells = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(weight_map(arr, kind), axis=0, out=cells[1:, 1:])
    np.cumsum(cells[1:, 1:], axis=1, out=cells[1:, 1:])
    return Sat(width=w, height=h, kind=kind, cells=cells)


def build_rsat(img: np.ndarray, kind: WeightKind, max_radius: int) -> Rsat:
    """Build the diagonal prefix table of one weight kind.

    max_radius only caps the radii diamond_region_sum will accept; the
    rotated-coordinate layout itself supports any diamond that fits in
    the image.
    """
    arr = as_gray(img)
    if max_radius < 1:
        raise ValueError(f"max_radius must be >= 1, got {max_radius}")
    h, w = arr.shape
    _check_overflow(w, h)
    wm = weight_map(arr, kind)
    side = w + h - 1
    diag = np.zeros((side, side), dtype=np.int64)
    iy, ix = np.indices((h, w))
    diag[ix + iy, ix - iy + h - 1] = wm
    np.cumsum(diag, axis=0, out=diag)  # accumulate u ascending
    diag = np.flip(np.cumsum(np.flip(diag, axis=1), axis=1), axis=1)  # v descending
    table = np.zeros((side + 1, side + 1), dtype=np.int64)
    table[1:, :side] = diag
    return Rsat(width=w, height=h, kind=kind, max_radius=max_radius, table=table)


def square_region_sum(sat: Sat, cx: Index, cy: Index, n: int) -> Index:
    """Sum over the 2n x 2n window centered at (cx, cy).

    The window spans columns [cx-n+1, cx+n] and rows [cy-n+1, cy+n]
    and must lie inside the image. cx/cy may be equal-shaped integer
    arrays, in which case an array of sums is returned.
    """
    if n < 1:
        raise ValueError(f"half-size n must be >= 1, got {n}")
    _require_inside(
        np.subtract(cx, n - 1), np.add(cx, n), np.subtract(cy, n - 1), np.add(cy, n),
        sat.width, sat.height, "square window",
    )
    return (
        sat.cell(np.add(cx, n), np.add(cy, n))
        - sat.cell(np.subtract(cx, n), np.add(cy, n))
        - sat.cell(np.add(cx, n), np.subtract(cy, n))
        + sat.cell(np.subtract(cx, n), np.subtract(cy, n))
    )


def diamond_region_sum(rsat: Rsat, cx: Index, cy: Index, r: int) -> Index:
    """Sum over the closed l1 ball {|i - cx| + |j - cy| <= r}.

    The ball must lie inside the image and r must not exceed the
    table's max_radius. cx/cy may be integer arrays.
    """
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    if r > rsat.max_radius:
        raise ValueError(f"radius {r} exceeds table max_radius {rsat.max_radius}")
    _require_inside(
        np.subtract(cx, r), np.add(cx, r), np.subtract(cy, r), np.add(cy, r),
        rsat.width, rsat.height, "diamond",
    )
    u = np.add(cx, cy)
    v = np.subtract(cx, cy)
    return (
        rsat._h(u + r, v - r)
        - rsat._h(u - r - 1, v - r)
        - rsat._h(u + r, v + r + 1)
        + rsat._h(u - r - 1, v + r + 1)
    )


def diamond_pixel_count(r: int) -> int:
    """Pixels in a closed l1 ball of radius r: 2r^2 + 2r + 1."""
    return 2 * r * r + 2 * r + 1


def _require_inside(x0, x1, y0, y1, w: int, h: int, what: str) -> None:
    bad = (np.min(x0) < 0) or (np.max(x1) > w - 1) or (np.min(y0) < 0) or (np.max(y1) > h - 1)
    if bad:
        raise ValueError(f"{what} leaves the {w}x{h} image")


@dataclass
class IntegralTables:
    """All eight tables (4 weight kinds x {Sat, Rsat}) for one image."""

    width: int
    height: int
    max_radius: int
    sats: Dict[WeightKind, Sat] = field(repr=False)
    rsats: Dict[WeightKind, Rsat] = field(repr=False)


def build_tables(img: np.ndarray, max_radius: Optional[int] = None) -> IntegralTables:
    """Build every table needed by the patch features.

    Parameters
    ----------
    img : numpy.ndarray
        Grayscale image.
    max_radius : int, optional
        Largest diamond radius queries will use. Defaults to
        min(width, height), which never rejects an in-bounds diamond.
    """
    arr = as_gray(img)
    h, w = arr.shape
    if max_radius is None:
        max_radius = min(w, h)
    sats = {k: build_sat(arr, k) for k in WeightKind}
    rsats = {k: build_rsat(arr, k, max_radius) for k in WeightKind}
    return IntegralTables(width=w, height=h, max_radius=max_radius, sats=sats, rsats=rsats)
