"""First-stage screening: quantized star features over a scale ladder.

The screen answers one question per patch center: could a scaled,
rotated copy of the template plausibly sit here? It is built to be
one-sided. A center is only discarded when its quantized ring features
provably cannot match any template instance in the covered scale
range; everything the screen cannot evaluate (image borders, sizes too
small to carry rings) is kept.

Feature keys and the guard band
-------------------------------
Each ring contributes a (mean, std, grad_mag) triple, quantized per
channel by Q(f) = floor(f / q + 1/2). When a template instance is
inserted, each channel marks the cells of f - q/2, f and f + q/2, and
the set stores the cross product, so any patch whose per-channel
features sit within q/2 of an inserted instance is guaranteed to hit
a marked key. Matching tests each ring independently and ANDs the
verdicts.

The scale ladder
----------------
Patch sizes m = round(beta * n * ratio^-t) are scanned while the
unrounded size stays >= alpha * n, with m = n forced whenever
alpha <= 1 <= beta. Each size's feature set covers template rescales
k = m .. ceil(m * ratio), so consecutive sizes cover the whole scale
range with one scan per size.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .features import (
    MIN_RING_HALF_SIZE,
    SQRT2,
    RingBand,
    RingFeatureVector,
    _diamond_stats_from_sums,
    _octagon_from_parts,
    _octagon_maps,
    _square_stats_from_sums,
    patch_center_margins,
    ring_feature_maps,
    ring_plan,
    round_half_up,
)
from .image_io import as_gray, crop_center, resize_bilinear, std_dev
from .integral import IntegralTables, Rsat, Sat, WeightKind, build_tables

MIN_PATCH_SIDE = 2 * MIN_RING_HALF_SIZE

_KEY_BASE = 1 << 21  # per-channel cell capacity of a packed int64 key


class FlatTemplateError(ValueError):
    """Template has too little variance to be screened."""


@dataclass(frozen=True)
class Quantizer:
    """Per-channel quantization factors (intensity levels per cell)."""

    q_mean: float = 8.0
    q_std: float = 8.0
    q_grad: float = 8.0

    def __post_init__(self) -> None:
        for name, q in (("q_mean", self.q_mean), ("q_std", self.q_std), ("q_grad", self.q_grad)):
            if not (q >= 1e-3):
                raise ValueError(f"{name} must be >= 0.001, got {q}")

    def factors(self) -> Tuple[float, float, float]:
        return (self.q_mean, self.q_std, self.q_grad)


def quantize(value: float, q: float) -> int:
    """Quantization cell of a feature value: floor(value / q + 1/2)."""
    return int(np.floor(value / q + 0.5))


def _quantize_arr(values: np.ndarray, q: float) -> np.ndarray:
    return np.floor(values / q + 0.5).astype(np.int64)


def _pack_cells(cm: np.ndarray, cs: np.ndarray, cg: np.ndarray) -> np.ndarray:
    # packing is injective only for cells in [0, _KEY_BASE)
    for c in (cm, cs, cg):
        if int(np.max(c, initial=0)) >= _KEY_BASE:
            raise ValueError("quantized cell exceeds key capacity, quantizer too fine")
        if int(np.min(c, initial=0)) < 0:
            raise ValueError("negative quantized cell; features must be non-negative")
    return (cm * _KEY_BASE + cs) * _KEY_BASE + cg


class FeatureSet:
    """Per-ring sets of packed quantized feature keys.

    Membership is associative: only the marked keys are stored, so the
    cost scales with the number of inserted template instances, not
    with the space of possible feature values.
    """

    def __init__(self, plan: Sequence[Tuple[int, int]], quantizer: Quantizer):
        if not plan:
            raise ValueError("empty ring plan")
        self.plan = tuple(plan)
        self.quantizer = quantizer
        self._rings: List[set] = [set() for _ in plan]
        self._sorted: Optional[List[np.ndarray]] = None

    def __len__(self) -> int:
        return sum(len(s) for s in self._rings)

    def ring_sizes(self) -> Tuple[int, ...]:
        return tuple(len(s) for s in self._rings)

    def _guard_cells(self, value: float, q: float) -> List[int]:
        half = q / 2.0
        cells = {quantize(value - half, q), quantize(value, q), quantize(value + half, q)}
        return sorted(cells)

    def insert(self, fv: RingFeatureVector) -> None:
        """Insert one template instance with the guard band applied."""
        if len(fv) != len(self.plan):
            raise ValueError(f"expected {len(self.plan)} rings, got {len(fv)}")
        qm, qs, qg = self.quantizer.factors()
        for ring, band in zip(self._rings, fv.rings):
            for cm in self._guard_cells(band.mean, qm):
                for cs in self._guard_cells(band.std, qs):
                    for cg in self._guard_cells(band.grad_mag, qg):
                        if cm >= _KEY_BASE or cs >= _KEY_BASE or cg >= _KEY_BASE:
                            raise ValueError(
                                "quantized cell exceeds key capacity, quantizer too fine"
                            )
                        if cm < 0 or cs < 0 or cg < 0:
                            raise ValueError(
                                "negative quantized cell; features must be non-negative"
                            )
                        ring.add((cm * _KEY_BASE + cs) * _KEY_BASE + cg)
        self._sorted = None

    def ring_keys(self) -> List[np.ndarray]:
        """Sorted key arrays, one per ring (cached)."""
        if self._sorted is None:
            self._sorted = [
                np.fromiter(s, dtype=np.int64, count=len(s)) for s in self._rings
            ]
            for a in self._sorted:
                a.sort()
        return self._sorted

    def contains(self, fv: RingFeatureVector) -> bool:
        """True when every ring's quantized key is marked."""
        if len(fv) != len(self.plan):
            raise ValueError(f"expected {len(self.plan)} rings, got {len(fv)}")
        qm, qs, qg = self.quantizer.factors()
        for ring, band in zip(self._rings, fv.rings):
            cm = quantize(band.mean, qm)
            cs = quantize(band.std, qs)
            cg = quantize(band.grad_mag, qg)
            if cm < 0 or cs < 0 or cg < 0:
                return False
            if (cm * _KEY_BASE + cs) * _KEY_BASE + cg not in ring:
                return False
        return True


def _member_mask(keys: np.ndarray, sorted_keys: np.ndarray) -> np.ndarray:
    if sorted_keys.size == 0:
        return np.zeros(keys.shape, dtype=bool)
    idx = np.searchsorted(sorted_keys, keys)
    idx = np.minimum(idx, sorted_keys.size - 1)
    return sorted_keys[idx] == keys


@dataclass(frozen=True)
class ScreeningConfig:
    alpha: float = 0.5
    beta: float = 2.0
    ladder_ratio: float = SQRT2
    ring_count: int = 3
    quantizer: Quantizer = Quantizer()
    stride: int = 1
    min_template_std: float = 5.0

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= self.beta):
            raise ValueError(f"need 0 < alpha <= beta, got {self.alpha}, {self.beta}")
        if self.ladder_ratio <= 1.0:
            raise ValueError("ladder_ratio must exceed 1")
        if self.ring_count < 1:
            raise ValueError("ring_count must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def ladder_sizes(n: int, cfg: ScreeningConfig) -> Tuple[int, ...]:
    """Descending patch sizes the screen scans for an n x n template."""
    if n < 1:
        raise ValueError("template side must be >= 1")
    sizes: List[int] = []
    floor_raw = cfg.alpha * n * (1.0 - 1e-12)
    t = 0
    while True:
        raw = cfg.beta * n * cfg.ladder_ratio ** (-t)
        if raw < floor_raw:
            break
        m = round_half_up(raw)
        if m >= 1 and m not in sizes:
            sizes.append(m)
        t += 1
    if cfg.alpha <= 1.0 <= cfg.beta and n not in sizes:
        sizes.append(n)
    return tuple(sorted(sizes, reverse=True))


def build_feature_set(template: np.ndarray, m: int, cfg: ScreeningConfig) -> FeatureSet:
    """Feature set of every template rescale k = m .. ceil(m * ratio).

    Each rescale is resampled to k x k, center-cropped to m x m, and
    its ring features are inserted guard-banded. The k = m instance of
    an unscaled template is the template itself, so the template's own
    key is always present.
    """
    tpl = as_gray(template)
    if m < MIN_PATCH_SIDE:
        raise ValueError(f"patch side {m} below minimum {MIN_PATCH_SIDE}")
    plan = ring_plan(m, cfg.ring_count)
    fs = FeatureSet(plan, cfg.quantizer)
    center = (m - 1) // 2
    k_hi = math.ceil(m * cfg.ladder_ratio)
    centers = np.array([center], dtype=np.int64)
    for k in range(m, k_hi + 1):
        scaled = resize_bilinear(tpl, k, k)
        z = crop_center(scaled, m, m)
        t = build_tables(z)
        maps = ring_feature_maps(t, centers, centers, plan)
        fv = RingFeatureVector(
            tuple(
                RingBand(n, d, float(mm[0]), float(ss[0]), float(gg[0]))
                for (n, d), (mm, ss, gg) in zip(plan, maps)
            )
        )
        fs.insert(fv)
    return fs


@dataclass(frozen=True)
class PruneStats:
    patches_tested: int
    patches_kept: int
    region_pixels_kept: int
    total_pixels: int
    wall_time_s: float

    @property
    def patch_pruning(self) -> float:
        """1 - kept/tested over evaluated centers (1.0 when none kept,
        including the degenerate zero-tested case)."""
        if self.patches_tested == 0:
            return 1.0
        return 1.0 - self.patches_kept / self.patches_tested

    @property
    def region_pruning(self) -> float:
        if self.total_pixels == 0:
            return 1.0
        return 1.0 - self.region_pixels_kept / self.total_pixels


@dataclass
class ScreeningResult:
    """Everything the second stage needs from the screen.

    candidates lists evaluated survivors as (cx, cy, m), ordered by
    ladder position (largest size first), then row, then column.
    size_masks mark kept centers per ladder size, including border
    centers kept because their shapes do not fit (never evaluated, so
    never pruned). region_mask is the union of the m x m footprints of
    the evaluated survivors only; unevaluable border centers appear in
    the per-size masks but do not enter the candidate list or the
    merged region.
    """

    width: int
    height: int
    template_side: int
    config: ScreeningConfig
    ladder: Tuple[int, ...]
    candidates: List[Tuple[int, int, int]]
    size_masks: Dict[int, np.ndarray]
    region_mask: np.ndarray
    stats: PruneStats


def prune_stats(result: ScreeningResult) -> PruneStats:
    """Recompute the pruning stats from a result's own data."""
    return PruneStats(
        patches_tested=result.stats.patches_tested,
        patches_kept=len(result.candidates),
        region_pixels_kept=int(result.region_mask.sum()),
        total_pixels=result.width * result.height,
        wall_time_s=result.stats.wall_time_s,
    )


def _grid_coords(limit: int, stride: int) -> np.ndarray:
    return np.arange(0, limit, stride, dtype=np.int64)


def _footprint_union(center_mask: np.ndarray, m: int, out: np.ndarray) -> None:
    """OR the m x m windows of every mask-true center into out."""
    h, w = center_mask.shape
    lo, hi = patch_center_margins(m)
    counts = np.zeros((h + 1, w + 1), dtype=np.int64)
    counts[1:, 1:] = center_mask.astype(np.int64).cumsum(axis=0).cumsum(axis=1)
    ys = np.arange(h, dtype=np.int64)
    xs = np.arange(w, dtype=np.int64)
    # pixel p is covered iff some center lies in [p - hi, p + lo]
    y0 = np.clip(ys - hi, 0, h)[:, None]
    y1 = np.clip(ys + lo + 1, 0, h)[:, None]
    x0 = np.clip(xs - hi, 0, w)[None, :]
    x1 = np.clip(xs + lo + 1, 0, w)[None, :]
    covered = counts[y1, x1] - counts[y0, x1] - counts[y1, x0] + counts[y0, x0]
    out |= covered > 0


def _square_sums_rect(sat: Sat, ix: np.ndarray, iy: np.ndarray, step: int, n: int) -> np.ndarray:
    """Window sums for the arithmetic center grid ix x iy, via slicing.

    Equivalent to square_region_sum over the meshgrid, but reads the
    table through four strided views instead of gather indexing. The
    caller guarantees every window is inside the image.
    """
    c = sat.cells
    x0, x1 = int(ix[0]), int(ix[-1])
    y0, y1 = int(iy[0]), int(iy[-1])
    ya, yb = y0 + n + 1, y1 + n + 2
    yc, yd = y0 - n + 1, y1 - n + 2
    xa, xb = x0 + n + 1, x1 + n + 2
    xc, xd = x0 - n + 1, x1 - n + 2
    return (
        c[ya:yb:step, xa:xb:step]
        - c[ya:yb:step, xc:xd:step]
        - c[yc:yd:step, xa:xb:step]
        + c[yc:yd:step, xc:xd:step]
    )


def _diamond_sums_rect(rsat: Rsat, base_flat: np.ndarray, r: int) -> np.ndarray:
    """Diamond sums for pre-flattened center indices, via offset takes.

    base_flat holds the raveled table position of each center's (u, v)
    corner lookup base; the four corners differ from it by scalar
    offsets, so the gather reduces to one np.take per corner.
    """
    t = rsat.table
    cols = t.shape[1]
    flat = t.reshape(-1)
    a = np.take(flat, base_flat + (r * cols - r))
    b = np.take(flat, base_flat + (-(r + 1) * cols - r))
    c = np.take(flat, base_flat + (r * cols + r + 1))
    d = np.take(flat, base_flat + (-(r + 1) * cols + r + 1))
    return a - b - c + d


def _rect_base_flat(tables: IntegralTables, ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
    # raveled position of _h(u, v) = table[u + 1, v + h - 1], u = x + y, v = x - y
    cols = tables.rsats[WeightKind.PLAIN].table.shape[1]
    u = iy[:, None] + ix[None, :]
    v = ix[None, :] - iy[:, None]
    return (u + 1) * cols + (v + tables.height - 1)


def _ring_maps_rect(
    tables: IntegralTables,
    ix: np.ndarray,
    iy: np.ndarray,
    step: int,
    base_flat: np.ndarray,
    n: int,
    d: int,
):
    """Octagonal-star maps over a center rectangle, fast table access.

    Produces floats bit-identical to _octagon_maps on the same centers:
    the integer sums are equal by construction and the arithmetic runs
    through the same shared helpers.
    """
    cxs = ix[None, :]
    cys = iy[:, None]
    sq = _square_stats_from_sums(
        _square_sums_rect(tables.sats[WeightKind.PLAIN], ix, iy, step, n),
        _square_sums_rect(tables.sats[WeightKind.X_WEIGHTED], ix, iy, step, n),
        _square_sums_rect(tables.sats[WeightKind.Y_WEIGHTED], ix, iy, step, n),
        _square_sums_rect(tables.sats[WeightKind.SQUARED], ix, iy, step, n),
        cxs,
        cys,
        n,
    )
    di = _diamond_stats_from_sums(
        _diamond_sums_rect(tables.rsats[WeightKind.PLAIN], base_flat, d),
        _diamond_sums_rect(tables.rsats[WeightKind.X_WEIGHTED], base_flat, d),
        _diamond_sums_rect(tables.rsats[WeightKind.Y_WEIGHTED], base_flat, d),
        _diamond_sums_rect(tables.rsats[WeightKind.SQUARED], base_flat, d),
        cxs,
        cys,
        d,
    )
    return _octagon_from_parts(sq, di)


def _scan_size(
    tables: IntegralTables,
    fs: FeatureSet,
    m: int,
    stride: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Evaluate one ladder size over the interior stride grid.

    The outermost ring runs over the whole grid through the strided
    fast path; later rings only touch its survivors. Returns
    (kept_cx, kept_cy, center_mask, tested) where center_mask already
    includes the unevaluable border grid centers.
    """
    w, h = tables.width, tables.height
    lo, hi = patch_center_margins(m)
    gx = _grid_coords(w, stride)
    gy = _grid_coords(h, stride)
    mask = np.zeros((h, w), dtype=bool)
    ix = gx[(gx >= lo) & (gx <= w - 1 - hi)]
    iy = gy[(gy >= lo) & (gy <= h - 1 - hi)]
    # everything on the grid but outside the evaluable interior is kept
    border_x = gx[(gx < lo) | (gx > w - 1 - hi)]
    border_y = gy[(gy < lo) | (gy > h - 1 - hi)]
    mask[np.ix_(gy, border_x)] = True
    mask[np.ix_(border_y, gx)] = True
    if ix.size == 0 or iy.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64), mask, 0

    tested = ix.size * iy.size
    ring_keys = fs.ring_keys()
    qm, qs, qg = fs.quantizer.factors()

    n0, d0 = fs.plan[0]
    base_flat = _rect_base_flat(tables, ix, iy)
    mean, std, gmag = _ring_maps_rect(tables, ix, iy, stride, base_flat, n0, d0)
    keys = _pack_cells(_quantize_arr(mean, qm), _quantize_arr(std, qs), _quantize_arr(gmag, qg))
    ok = _member_mask(keys.reshape(-1), ring_keys[0]).reshape(keys.shape)
    row, col = np.nonzero(ok)
    cxs = ix[col]
    cys = iy[row]

    for ring_index in range(1, len(fs.plan)):
        if cxs.size == 0:
            break
        n, d = fs.plan[ring_index]
        mean, std, gmag = _octagon_maps(tables, cxs, cys, n, d)
        keys = _pack_cells(
            _quantize_arr(mean, qm), _quantize_arr(std, qs), _quantize_arr(gmag, qg)
        )
        ok = _member_mask(keys, ring_keys[ring_index])
        cxs = cxs[ok]
        cys = cys[ok]
    mask[cys, cxs] = True
    return cxs, cys, mask, tested


def screen(image: np.ndarray, template: np.ndarray, cfg: Optional[ScreeningConfig] = None) -> ScreeningResult:
    """Run the full first stage: ladder, feature sets, and the scan.

    Raises FlatTemplateError when the template's standard deviation is
    below cfg.min_template_std ("template too flat"), and ValueError
    for non-square or too-small templates.
    """
    cfg = cfg or ScreeningConfig()
    img = as_gray(image)
    tpl = as_gray(template)
    h, w = img.shape
    th, tw = tpl.shape
    if th != tw:
        raise ValueError(f"template must be square, got {tw}x{th}")
    n = tw
    if n < MIN_PATCH_SIDE:
        raise ValueError(f"template side {n} below minimum {MIN_PATCH_SIDE}")
    if std_dev(tpl) < cfg.min_template_std:
        raise FlatTemplateError(
            f"template too flat: std {std_dev(tpl):.3f} below {cfg.min_template_std}"
        )

    start = time.perf_counter()
    ladder = ladder_sizes(n, cfg)
    tables = build_tables(img)
    size_masks: Dict[int, np.ndarray] = {}
    region = np.zeros((h, w), dtype=bool)
    candidates: List[Tuple[int, int, int]] = []
    tested_total = 0
    kept_total = 0
    for m in ladder:
        if m < MIN_PATCH_SIDE:
            # cannot carry any ring: keep every grid center at this size
            mask = np.zeros((h, w), dtype=bool)
            mask[np.ix_(_grid_coords(h, cfg.stride), _grid_coords(w, cfg.stride))] = True
            size_masks[m] = mask
            continue
        fs = build_feature_set(tpl, m, cfg)
        kept_cx, kept_cy, mask, tested = _scan_size(tables, fs, m, cfg.stride)
        tested_total += tested
        kept_total += kept_cx.size
        # survivor arrays come out of the scan in (cy, cx) row-major order
        candidates.extend((int(x), int(y), m) for x, y in zip(kept_cx, kept_cy))
        size_masks[m] = mask
        survivors = np.zeros((h, w), dtype=bool)
        survivors[kept_cy, kept_cx] = True
        _footprint_union(survivors, m, region)
    elapsed = time.perf_counter() - start
    stats = PruneStats(
        patches_tested=tested_total,
        patches_kept=kept_total,
        region_pixels_kept=int(region.sum()),
        total_pixels=w * h,
        wall_time_s=elapsed,
    )
    return ScreeningResult(
        width=w,
        height=h,
        template_side=n,
        config=cfg,
        ladder=ladder,
        candidates=candidates,
        size_masks=size_masks,
        region_mask=region,
        stats=stats,
    )
