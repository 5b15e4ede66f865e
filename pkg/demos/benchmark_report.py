"""A small end-to-end benchmark run with a saved JSON report.

Generates a handful of textured scenes, hides two templates in each at
random rotation and scale, screens them all, and prints the aggregate
success and pruning numbers. The full per-case report is written to
demos/out/report.json; rerunning with the same seed reproduces it
byte for byte (timings are excluded from that comparison).
"""

from pathlib import Path

from starscreen import make_textured_scene, run_benchmark

OUT = Path(__file__).parent / "out"


def main() -> None:
    dataset = [(f"scene{i}.pgm", make_textured_scene(320, 240, seed=600 + i))
               for i in range(6)]
    report = run_benchmark(dataset, cases_per_image=2, seed=1)

    for case in report.cases:
        print(f"{case['image']:>11} case {case['case']}: "
              f"scale {case['scale']:.2f} angle {case['angle']:6.1f} "
              f"overlap {case['overlap_preserved']:.2f} "
              f"{'ok' if case['success'] else 'MISSED'}")

    agg = report.aggregates()
    print(f"\nsuccess {agg['success_ratio']:.0%} of {agg['num_cases']} cases, "
          f"mean patch pruning {agg['mean_patch_pruning']:.1%}, "
          f"mean region pruning {agg['mean_region_pruning']:.1%}")

    OUT.mkdir(exist_ok=True)
    report.save(OUT / "report.json")
    print(f"wrote {OUT / 'report.json'}")


if __name__ == "__main__":
    main()
