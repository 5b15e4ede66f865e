"""Rotation-robust patch features from integral tables.

Every feature here is a function of a handful of integral-table
lookups, so evaluating a patch is O(1) regardless of its size:

* square window stats over the 2n x 2n box centered at (cx, cy);
* diamond stats over the closed l1 ball of radius r;
* octagonal-star stats, the average of a square and a diamond, whose
  eightfold symmetry suppresses the orientation sensitivity of either
  shape alone;
* a ring ladder of nested octagonal stars summarizing an m x m patch.

Gradients use zero-sum odd-symmetric kernels (offsets are taken from
the window's continuous center), normalized by the kernel's L1 mass,
so a constant patch has zero gradient and an affine remap aI+b scales
gradients by a.

The *_maps functions are the vectorized cores: they take arrays of
centers and return arrays of features. The scalar wrappers route
through them so that a feature computed one patch at a time is
bit-identical to the same feature computed in a batch scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .integral import (
    IntegralTables,
    WeightKind,
    diamond_pixel_count,
    diamond_region_sum,
    square_region_sum,
)

MIN_RING_HALF_SIZE = 4
SQRT2 = math.sqrt(2.0)


def round_half_up(x: float) -> int:
    """round(3.5) -> 4, round(2.5) -> 3 is not what we want; this
    always rounds .5 upward."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ShapeFeatures:
    """Mean, standard deviation and normalized gradient of one shape."""

    mean: float
    std: float
    grad_x: float
    grad_y: float


@dataclass(frozen=True)
class OctagonFeatures:
    """Star = square + diamond superposition; gradient collapsed to a
    magnitude so the triple is orientation-robust."""

    mean: float
    std: float
    grad_mag: float


@dataclass(frozen=True)
class RingBand:
    half_size: int
    radius: int
    mean: float
    std: float
    grad_mag: float


@dataclass(frozen=True)
class RingFeatureVector:
    """Per-ring octagonal-star triples, outermost ring first."""

    rings: Tuple[RingBand, ...]

    def __post_init__(self) -> None:
        sizes = [b.half_size for b in self.rings]
        if any(inner >= outer for outer, inner in zip(sizes, sizes[1:])):
            raise ValueError(f"ring half-sizes must strictly decrease, got {sizes}")

    def __len__(self) -> int:
        return len(self.rings)


def _square_stats_from_sums(s1, sx, sy, s2, cxs, cys, n: int):
    count = float(4 * n * n)
    w1 = float(2 * n**3)
    mean = s1 / count
    std = np.sqrt(np.maximum(s2 / count - mean * mean, 0.0))
    # 1-based weights; the window center sits at cx + 0.5.
    gx = (sx - (np.asarray(cxs, dtype=np.float64) + 1.5) * s1) / w1
    gy = (sy - (np.asarray(cys, dtype=np.float64) + 1.5) * s1) / w1
    return mean, std, gx, gy


def _square_stat_maps(t: IntegralTables, cxs, cys, n: int):
    s1 = square_region_sum(t.sats[WeightKind.PLAIN], cxs, cys, n)
    sx = square_region_sum(t.sats[WeightKind.X_WEIGHTED], cxs, cys, n)
    sy = square_region_sum(t.sats[WeightKind.Y_WEIGHTED], cxs, cys, n)
    s2 = square_region_sum(t.sats[WeightKind.SQUARED], cxs, cys, n)
    return _square_stats_from_sums(s1, sx, sy, s2, cxs, cys, n)


def _ball_l1_mass(r: int) -> int:
    # sum of |i - cx| over the closed ball, per axis
    return 2 * r * r + r * (r - 1) * (2 * r - 1) // 3


def _diamond_stats_from_sums(s1, sx, sy, s2, cxs, cys, r: int):
    count = float(diamond_pixel_count(r))
    w1 = float(_ball_l1_mass(r))
    mean = s1 / count
    std = np.sqrt(np.maximum(s2 / count - mean * mean, 0.0))
    gx = (sx - (np.asarray(cxs, dtype=np.float64) + 1.0) * s1) / w1
    gy = (sy - (np.asarray(cys, dtype=np.float64) + 1.0) * s1) / w1
    return mean, std, gx, gy


def _diamond_stat_maps(t: IntegralTables, cxs, cys, r: int):
    s1 = diamond_region_sum(t.rsats[WeightKind.PLAIN], cxs, cys, r)
    sx = diamond_region_sum(t.rsats[WeightKind.X_WEIGHTED], cxs, cys, r)
    sy = diamond_region_sum(t.rsats[WeightKind.Y_WEIGHTED], cxs, cys, r)
    s2 = diamond_region_sum(t.rsats[WeightKind.SQUARED], cxs, cys, r)
    return _diamond_stats_from_sums(s1, sx, sy, s2, cxs, cys, r)


def _octagon_from_parts(sq, di):
    mean = (sq[0] + di[0]) * 0.5
    std = (sq[1] + di[1]) * 0.5
    gx = (sq[2] + di[2]) * 0.5
    gy = (sq[3] + di[3]) * 0.5
    gmag = np.sqrt(gx * gx + gy * gy)
    return mean, std, gmag


def default_star_radius(n: int) -> int:
    """Diamond radius paired with a half-size-n square: round(sqrt2*n),
    which gives the diamond the same pixel area as the square."""
    return round_half_up(SQRT2 * n)


def _octagon_maps(t: IntegralTables, cxs, cys, n: int, radius: int):
    sq = _square_stat_maps(t, cxs, cys, n)
    di = _diamond_stat_maps(t, cxs, cys, radius)
    return _octagon_from_parts(sq, di)


def square_features(t: IntegralTables, cx: int, cy: int, n: int) -> ShapeFeatures:
    """Stats of the 2n x 2n window centered at (cx, cy)."""
    m, s, gx, gy = _square_stat_maps(
        t, np.array([cx], dtype=np.int64), np.array([cy], dtype=np.int64), n
    )
    return ShapeFeatures(float(m[0]), float(s[0]), float(gx[0]), float(gy[0]))


def diamond_features(t: IntegralTables, cx: int, cy: int, r: int) -> ShapeFeatures:
    """Stats of the closed l1 ball of radius r centered at (cx, cy)."""
    if r < 1:
        raise ValueError("diamond features need radius >= 1")
    m, s, gx, gy = _diamond_stat_maps(
        t, np.array([cx], dtype=np.int64), np.array([cy], dtype=np.int64), r
    )
    return ShapeFeatures(float(m[0]), float(s[0]), float(gx[0]), float(gy[0]))


def octagon_features(
    t: IntegralTables, cx: int, cy: int, n: int, radius: Optional[int] = None
) -> OctagonFeatures:
    """Octagonal-star stats: square of half-size n superposed with a
    diamond of the given radius (default: same-area, round(sqrt2*n)).

    Both shapes must lie inside the image.
    """
    r = default_star_radius(n) if radius is None else radius
    m, s, g = _octagon_maps(
        t, np.array([cx], dtype=np.int64), np.array([cy], dtype=np.int64), n, r
    )
    return OctagonFeatures(float(m[0]), float(s[0]), float(g[0]))


def ring_plan(m: int, ring_count: int) -> Tuple[Tuple[int, int], ...]:
    """Ring (half_size, diamond_radius) pairs for an m x m patch.

    Half-sizes follow the sqrt2 ladder floor(m / (2 * sqrt2^r)); rings
    smaller than MIN_RING_HALF_SIZE are dropped. Each diamond radius is
    the same-area pairing round(sqrt2 * n) capped at (m-1)//2 so every
    shape can be evaluated from the m x m patch alone: the screen needs
    template-side and patch-side features to see exactly the same
    pixels, and nothing outside the patch is known on the template side.
    """
    if m < 2 * MIN_RING_HALF_SIZE:
        raise ValueError(f"patch side {m} too small for any ring")
    if ring_count < 1:
        raise ValueError("ring_count must be >= 1")
    cap = (m - 1) // 2
    plan: List[Tuple[int, int]] = []
    for r in range(ring_count):
        n = int(math.floor(m / (2.0 * 2.0 ** (r / 2.0))))
        if n < MIN_RING_HALF_SIZE:
            break
        plan.append((n, min(default_star_radius(n), cap)))
    return tuple(plan)


def patch_center_margins(m: int) -> Tuple[int, int]:
    """(left/top, right/bottom) margins a center needs so the whole
    m x m patch window [c-(m-1)//2, c+m//2] stays inside the image."""
    return (m - 1) // 2, m // 2


def ring_feature_maps(
    t: IntegralTables, cxs: np.ndarray, cys: np.ndarray, plan: Sequence[Tuple[int, int]]
):
    """Per-ring (mean, std, grad_mag) arrays for arrays of centers."""
    return [_octagon_maps(t, cxs, cys, n, d) for n, d in plan]


def ring_features(
    t: IntegralTables, cx: int, cy: int, m: int, ring_count: int = 3
) -> RingFeatureVector:
    """Ring-ladder star features of the m x m patch centered at (cx, cy).

    All shapes of all rings lie inside the patch window, which itself
    must lie inside the image.
    """
    plan = ring_plan(m, ring_count)
    lo, hi = patch_center_margins(m)
    if cx < lo or cy < lo or cx + hi > t.width - 1 or cy + hi > t.height - 1:
        raise ValueError(f"{m}x{m} patch at ({cx}, {cy}) leaves the image")
    maps = ring_feature_maps(
        t, np.array([cx], dtype=np.int64), np.array([cy], dtype=np.int64), plan
    )
    bands = tuple(
        RingBand(n, d, float(mm[0]), float(ss[0]), float(gg[0]))
        for (n, d), (mm, ss, gg) in zip(plan, maps)
    )
    return RingFeatureVector(bands)
