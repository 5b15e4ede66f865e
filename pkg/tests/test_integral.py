"""Integral tables against brute-force region sums.

The oracles here never touch the tables: window sums come from plain
numpy slices of the weighted image and diamond sums from an explicit
l1-ball offset mask, so agreement means the prefix layouts and the
four-corner lookups are right, not merely self-consistent.
"""

import numpy as np
import pytest

from starscreen.integral import (
    IntegralTables,
    WeightKind,
    build_rsat,
    build_sat,
    build_tables,
    diamond_pixel_count,
    diamond_region_sum,
    square_region_sum,
    _check_overflow,
)


def _wmap(img: np.ndarray, kind: WeightKind) -> np.ndarray:
    """Weighted image computed from scratch (1-based coordinates)."""
    arr = img.astype(np.int64)
    h, w = arr.shape
    if kind is WeightKind.PLAIN:
        return arr
    if kind is WeightKind.X_WEIGHTED:
        return arr * np.arange(1, w + 1, dtype=np.int64)[None, :]
    if kind is WeightKind.Y_WEIGHTED:
        return arr * np.arange(1, h + 1, dtype=np.int64)[:, None]
    return arr * arr


def _square_oracle(img, kind, cx, cy, n):
    wm = _wmap(img, kind)
    return int(wm[cy - n + 1 : cy + n + 1, cx - n + 1 : cx + n + 1].sum())


def _diamond_oracle(img, kind, cx, cy, r):
    wm = _wmap(img, kind)
    total = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if abs(dx) + abs(dy) <= r:
                total += int(wm[cy + dy, cx + dx])
    return total


def _random_image(rng, max_side=48):
    h = int(rng.integers(4, max_side))
    w = int(rng.integers(4, max_side))
    return rng.integers(0, 256, size=(h, w), dtype=np.uint8)


# ── Sat ──────────────────────────────────────────────────────────────────

class TestSat:
    def test_tiny_frozen_table(self):
        """cells of [[1,2],[3,4]]: prefix sums padded by a zero edge."""
        sat = build_sat(np.array([[1, 2], [3, 4]], dtype=np.uint8), WeightKind.PLAIN)
        expected = np.array([[0, 0, 0], [0, 1, 3], [0, 4, 10]])
        assert np.array_equal(sat.cells, expected)

    def test_cell_virtual_zero_edge(self):
        rng = np.random.default_rng(0)
        img = _random_image(rng)
        sat = build_sat(img, WeightKind.PLAIN)
        h, w = img.shape
        assert sat.cell(-1, -1) == 0
        assert sat.cell(-1, h - 1) == 0
        assert sat.cell(w - 1, -1) == 0
        assert sat.cell(w - 1, h - 1) == int(img.sum())

    def test_cell_prefix_definition(self):
        rng = np.random.default_rng(1)
        img = _random_image(rng, max_side=20)
        for kind in WeightKind:
            sat = build_sat(img, kind)
            wm = _wmap(img, kind)
            for x, y in [(0, 0), (3, 2), (img.shape[1] - 1, img.shape[0] - 1)]:
                assert sat.cell(x, y) == wm[: y + 1, : x + 1].sum()

    def test_window_sums_match_oracle_all_kinds(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            img = _random_image(rng)
            h, w = img.shape
            sats = {k: build_sat(img, k) for k in WeightKind}
            for _ in range(8):
                n = int(rng.integers(1, min(w, h) // 2 + 1))
                cx = int(rng.integers(n - 1, w - n))
                cy = int(rng.integers(n - 1, h - n))
                for kind in WeightKind:
                    got = square_region_sum(sats[kind], cx, cy, n)
                    assert got == _square_oracle(img, kind, cx, cy, n)

    def test_window_sum_vectorized_equals_scalar(self):
        rng = np.random.default_rng(3)
        img = _random_image(rng)
        h, w = img.shape
        sat = build_sat(img, WeightKind.SQUARED)
        n = 2
        cxs = np.arange(n - 1, w - n, dtype=np.int64)
        cys = np.full_like(cxs, h // 2)
        vec = square_region_sum(sat, cxs, cys, n)
        for i, cx in enumerate(cxs):
            assert vec[i] == square_region_sum(sat, int(cx), h // 2, n)

    def test_x_weighted_ones_formula(self):
        # all-ones image: the x-weighted window sum is 2n * sum of the
        # 1-based column indices cx-n+2 .. cx+n+1
        img = np.ones((12, 12), dtype=np.uint8)
        sat = build_sat(img, WeightKind.X_WEIGHTED)
        cx = cy = 5
        n = 3
        cols = range(cx - n + 2, cx + n + 2)
        assert square_region_sum(sat, cx, cy, n) == 2 * n * sum(cols)

    def test_window_bounds_enforced(self):
        img = np.ones((10, 10), dtype=np.uint8)
        sat = build_sat(img, WeightKind.PLAIN)
        # n=2 window spans [cx-1, cx+2]: cx in [1, 7] is legal
        assert square_region_sum(sat, 1, 1, 2) == 16
        assert square_region_sum(sat, 7, 7, 2) == 16
        for cx, cy in [(0, 5), (8, 5), (5, 0), (5, 8)]:
            with pytest.raises(ValueError):
                square_region_sum(sat, cx, cy, 2)
        with pytest.raises(ValueError):
            square_region_sum(sat, 5, 5, 0)


# ── Rsat ─────────────────────────────────────────────────────────────────

class TestRsat:
    def test_triangle_cell_brute_force(self):
        """cell(x, y) sums the down-pointing triangle j <= y - |i - x|."""
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, size=(7, 9), dtype=np.uint8)
        rsat = build_rsat(img, WeightKind.PLAIN, max_radius=3)
        h, w = img.shape
        for x in range(w):
            for y in range(h):
                want = sum(
                    int(img[j, i])
                    for i in range(w)
                    for j in range(h)
                    if j <= y - abs(i - x)
                )
                assert rsat.cell(x, y) == want

    def test_diamond_counts_on_ones(self):
        img = np.ones((25, 25), dtype=np.uint8)
        rsat = build_rsat(img, WeightKind.PLAIN, max_radius=12)
        assert diamond_region_sum(rsat, 12, 12, 1) == 5
        assert diamond_region_sum(rsat, 12, 12, 2) == 13
        assert diamond_region_sum(rsat, 12, 12, 12) == diamond_pixel_count(12)

    def test_diamond_pixel_count_closed_form(self):
        # 2r^2 + 2r + 1, radius 10 gives 221
        assert diamond_pixel_count(0) == 1
        assert diamond_pixel_count(1) == 5
        assert diamond_pixel_count(10) == 221

    def test_radius_zero_is_the_pixel(self):
        rng = np.random.default_rng(5)
        img = _random_image(rng, max_side=16)
        rsat = build_rsat(img, WeightKind.PLAIN, max_radius=2)
        h, w = img.shape
        for _ in range(10):
            x = int(rng.integers(0, w))
            y = int(rng.integers(0, h))
            assert diamond_region_sum(rsat, x, y, 0) == int(img[y, x])

    def test_diamond_sums_match_oracle_all_kinds(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            img = _random_image(rng)
            h, w = img.shape
            rmax = (min(w, h) - 1) // 2  # keeps some center choice at every r
            rsats = {k: build_rsat(img, k, max_radius=rmax) for k in WeightKind}
            for _ in range(8):
                r = int(rng.integers(1, rmax + 1))
                cx = int(rng.integers(r, w - r))
                cy = int(rng.integers(r, h - r))
                for kind in WeightKind:
                    got = diamond_region_sum(rsats[kind], cx, cy, r)
                    assert got == _diamond_oracle(img, kind, cx, cy, r)

    def test_diamond_vectorized_equals_scalar(self):
        rng = np.random.default_rng(7)
        img = _random_image(rng)
        h, w = img.shape
        rsat = build_rsat(img, WeightKind.Y_WEIGHTED, max_radius=3)
        r = 3
        cxs = np.arange(r, w - r, dtype=np.int64)
        cys = np.full_like(cxs, h // 2)
        vec = diamond_region_sum(rsat, cxs, cys, r)
        for i, cx in enumerate(cxs):
            assert vec[i] == diamond_region_sum(rsat, int(cx), h // 2, r)

    def test_diamond_bounds_and_radius_cap(self):
        img = np.ones((11, 11), dtype=np.uint8)
        rsat = build_rsat(img, WeightKind.PLAIN, max_radius=4)
        assert diamond_region_sum(rsat, 4, 4, 4) == diamond_pixel_count(4)
        with pytest.raises(ValueError):
            diamond_region_sum(rsat, 3, 4, 4)  # pokes out on the left
        with pytest.raises(ValueError):
            diamond_region_sum(rsat, 5, 5, 5)  # beyond max_radius
        with pytest.raises(ValueError):
            diamond_region_sum(rsat, 5, 5, -1)
        with pytest.raises(ValueError):
            build_rsat(img, WeightKind.PLAIN, max_radius=0)

    def test_every_center_every_radius_small_image(self):
        """Exhaustive sweep on one image: all centers, radii 1..4."""
        rng = np.random.default_rng(8)
        img = rng.integers(0, 256, size=(13, 11), dtype=np.uint8)
        rsat = build_rsat(img, WeightKind.PLAIN, max_radius=4)
        h, w = img.shape
        for r in range(1, 5):
            for cy in range(r, h - r):
                for cx in range(r, w - r):
                    assert diamond_region_sum(rsat, cx, cy, r) == _diamond_oracle(
                        img, WeightKind.PLAIN, cx, cy, r
                    )


# ── build_tables ─────────────────────────────────────────────────────────

class TestBuildTables:
    def test_contains_all_eight_tables(self):
        img = np.random.default_rng(9).integers(0, 256, (16, 20), dtype=np.uint8)
        t = build_tables(img)
        assert isinstance(t, IntegralTables)
        assert t.width == 20 and t.height == 16
        assert set(t.sats) == set(WeightKind)
        assert set(t.rsats) == set(WeightKind)
        assert t.max_radius == 16  # min(w, h) default

    def test_tables_agree_with_per_kind_builders(self):
        img = np.random.default_rng(10).integers(0, 256, (9, 9), dtype=np.uint8)
        t = build_tables(img, max_radius=3)
        for kind in WeightKind:
            assert np.array_equal(t.sats[kind].cells, build_sat(img, kind).cells)
            assert np.array_equal(
                t.rsats[kind].table, build_rsat(img, kind, 3).table
            )

    def test_overflow_guard(self):
        # 255 * max(w,h) * w * h must stay below 2^62
        _check_overflow(4096, 4096)  # fine: ~2.9e13 weighted total
        with pytest.raises(ValueError):
            _check_overflow(2**19, 2**19)
