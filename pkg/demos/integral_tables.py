"""Constant-time region sums from the two prefix tables.

Builds the square and diagonal tables for one image, checks a couple
of sums against direct slicing, then races 20k window sums against the
obvious slice-and-sum loop. The point of the whole exercise: the table
lookup cost does not depend on the window size.
"""

import time

import numpy as np

from starscreen import (
    WeightKind,
    build_tables,
    diamond_pixel_count,
    diamond_region_sum,
    square_region_sum,
)


def main() -> None:
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (480, 640), dtype=np.uint8)
    tables = build_tables(img, max_radius=12)

    cx, cy, n = 300, 200, 8
    direct = int(img[cy - n + 1 : cy + n + 1, cx - n + 1 : cx + n + 1].sum())
    via_table = int(square_region_sum(tables.sats[WeightKind.PLAIN], cx, cy, n))
    print(f"square 16x16 at ({cx},{cy}): table {via_table}, direct {direct}")

    r = 10
    ys, xs = np.mgrid[0:480, 0:640]
    ball = np.abs(xs - cx) + np.abs(ys - cy) <= r
    direct_d = int(img[ball].sum())
    via_d = int(diamond_region_sum(tables.rsats[WeightKind.PLAIN], cx, cy, r))
    print(f"diamond r={r} ({diamond_pixel_count(r)} px): "
          f"table {via_d}, direct {direct_d}")

    k = 20_000
    cxs = rng.integers(32, 608, k)
    cys = rng.integers(32, 448, k)
    t0 = time.perf_counter()
    total_table = int(square_region_sum(tables.sats[WeightKind.PLAIN],
                                        cxs, cys, 16).sum())
    t_table = time.perf_counter() - t0

    t0 = time.perf_counter()
    total_naive = 0
    for x, y in zip(cxs, cys):
        total_naive += int(img[y - 15 : y + 17, x - 15 : x + 17].sum())
    t_naive = time.perf_counter() - t0

    assert total_table == total_naive
    print(f"{k} window sums (32x32): table {t_table * 1e3:.1f} ms, "
          f"slices {t_naive * 1e3:.0f} ms, "
          f"speedup {t_naive / t_table:.0f}x")


if __name__ == "__main__":
    main()
