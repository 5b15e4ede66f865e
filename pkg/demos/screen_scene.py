"""Screening a full scene: what survives, and how much is thrown away.

Hides a rotated, scaled copy of a template in a synthetic 640x480
scene, screens it, and prints the pruning statistics plus a coarse
ASCII render of the kept region. The scene, template and kept-region
mask are written to demos/out/ as PGMs for a closer look.
"""

from pathlib import Path

import numpy as np

from starscreen import make_case, make_textured_scene, overlap_preserved, save_pgm, screen

OUT = Path(__file__).parent / "out"


def ascii_mask(mask: np.ndarray, cols: int = 64) -> str:
    h, w = mask.shape
    step = max(1, w // cols)
    rows = []
    for y in range(0, h, 2 * step):
        row = "".join("#" if mask[y : y + 2 * step, x : x + step].any() else "."
                      for x in range(0, w, step))
        rows.append(row)
    return "\n".join(rows)


def main() -> None:
    scene = make_textured_scene(640, 480, seed=21)
    template, truth = make_case(scene, seed=3)
    print(f"hidden instance: center ({truth.cx},{truth.cy}), "
          f"angle {truth.angle:.1f} deg, scale {truth.scale:.2f}")

    result = screen(scene, template)
    s = result.stats
    print(f"ladder sizes: {list(result.ladder)}")
    print(f"patches tested {s.patches_tested}, kept {s.patches_kept} "
          f"({s.patch_pruning:.1%} pruned)")
    print(f"region kept {s.region_pixels_kept}/{s.total_pixels} px "
          f"({s.region_pruning:.1%} pruned) in {s.wall_time_s * 1e3:.0f} ms")
    print(f"true footprint preserved: {overlap_preserved(result, truth):.1%}")

    print("\nkept region (64 cols, # = kept):")
    print(ascii_mask(result.region_mask))

    OUT.mkdir(exist_ok=True)
    save_pgm(OUT / "scene.pgm", scene)
    save_pgm(OUT / "template.pgm", template)
    save_pgm(OUT / "kept_region.pgm",
             np.where(result.region_mask, 255, 0).astype(np.uint8))
    print(f"\nwrote scene.pgm, template.pgm, kept_region.pgm to {OUT}")


if __name__ == "__main__":
    main()
