"""Command-line surface for the screening pipeline.

Subcommands:
  screen  image + template -> region mask PGM, per-scale masks, stats JSON
  match   image + template -> best NCC hypothesis as JSON
  synth   image -> hidden-template case (template PGM + truth JSON)
  bench   dataset dir -> benchmark report JSON

Exit codes: 0 success, 1 usage or bad flag values, 2 I/O problems
(missing or malformed files), 3 degenerate template (too flat to
screen, or case generation exhausted its retries).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from typing import Optional

import click
import numpy as np

from .image_io import PgmError, load_pgm, save_pgm
from .screening import (
    FlatTemplateError,
    Quantizer,
    ScreeningConfig,
    ScreeningResult,
    ladder_sizes,
    screen,
)
from .second_stage import match_candidates
from .synth_bench import (
    CaseGenerationError,
    make_case,
    run_benchmark,
    write_json_atomic,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DEGENERATE = 3


@dataclass(frozen=True)
class CliConfig:
    """Parsed common flags: screening parameters plus run context."""

    alpha: float = 0.5
    beta: float = 2.0
    rings: int = 3
    q_mean: float = 8.0
    q_std: float = 8.0
    q_grad: float = 8.0
    stride: int = 1
    angle_step: float = 10.0
    seed: int = 0

    def screening(self) -> ScreeningConfig:
        return ScreeningConfig(
            alpha=self.alpha,
            beta=self.beta,
            ring_count=self.rings,
            quantizer=Quantizer(q_mean=self.q_mean, q_std=self.q_std, q_grad=self.q_grad),
            stride=self.stride,
        )


def _config_options(fn):
    opts = [
        click.option("--alpha", type=float, default=0.5, show_default=True,
                     help="Lower end of the covered scale range, as a ratio."),
        click.option("--beta", type=float, default=2.0, show_default=True,
                     help="Upper end of the covered scale range, as a ratio."),
        click.option("--rings", type=int, default=3, show_default=True,
                     help="Concentric feature rings per patch."),
        click.option("--q-mean", type=float, default=8.0, show_default=True,
                     help="Quantization step for the mean channel."),
        click.option("--q-std", type=float, default=8.0, show_default=True,
                     help="Quantization step for the std channel."),
        click.option("--q-grad", type=float, default=8.0, show_default=True,
                     help="Quantization step for the gradient channel."),
        click.option("--stride", type=int, default=1, show_default=True,
                     help="Center grid spacing in pixels."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _load_image(path: str) -> np.ndarray:
    return load_pgm(path)


def _mask_to_pgm(mask: np.ndarray) -> np.ndarray:
    return np.where(mask, 255, 0).astype(np.uint8)


def _screen_stats_payload(
    image: str, template: str, result: ScreeningResult
) -> dict:
    per_size = {str(m): 0 for m in result.ladder}
    for _, _, m in result.candidates:
        per_size[str(m)] += 1
    s = result.stats
    return {
        "image": image,
        "template": template,
        "template_side": result.template_side,
        "image_size": [result.width, result.height],
        "ladder": list(result.ladder),
        "config": {
            "alpha": result.config.alpha,
            "beta": result.config.beta,
            "ladder_ratio": result.config.ladder_ratio,
            "ring_count": result.config.ring_count,
            "q_mean": result.config.quantizer.q_mean,
            "q_std": result.config.quantizer.q_std,
            "q_grad": result.config.quantizer.q_grad,
            "stride": result.config.stride,
        },
        "stats": {
            "patches_tested": s.patches_tested,
            "patches_kept": s.patches_kept,
            "patch_pruning": s.patch_pruning,
            "region_pixels_kept": s.region_pixels_kept,
            "total_pixels": s.total_pixels,
            "region_pruning": s.region_pruning,
            "screen_time": s.wall_time_s,
        },
        "candidates_per_size": per_size,
    }


@click.group(name="starscreen")
def cli() -> None:
    """Rotation and scale invariant template-match screening."""


@cli.command("screen")
@click.argument("image", type=click.Path())
@click.argument("template", type=click.Path())
@_config_options
@click.option("--out-mask", type=click.Path(), default=None,
              help="Write the merged kept-region mask here (PGM, 255 = kept).")
@click.option("--out-stats", type=click.Path(), default=None,
              help="Write the stats block here (JSON).")
@click.option("--out-size-masks", type=click.Path(), default=None,
              help="Prefix for per-ladder-size center masks (PREFIX_mNN.pgm).")
def cmd_screen(image, template, out_mask, out_stats, out_size_masks, **flags) -> None:
    """Screen IMAGE for TEMPLATE and report what survived."""
    cfg = CliConfig(**flags).screening()
    img = _load_image(image)
    tpl = _load_image(template)
    result = screen(img, tpl, cfg)
    payload = _screen_stats_payload(image, template, result)
    if out_mask:
        save_pgm(out_mask, _mask_to_pgm(result.region_mask))
    if out_size_masks:
        for m, mask in result.size_masks.items():
            save_pgm(f"{out_size_masks}_m{m:03d}.pgm", _mask_to_pgm(mask))
    if out_stats:
        write_json_atomic(out_stats, payload)
    click.echo(json.dumps(payload["stats"], sort_keys=True))


@cli.command("match")
@click.argument("image", type=click.Path())
@click.argument("template", type=click.Path())
@_config_options
@click.option("--angle-step", type=float, default=10.0, show_default=True,
              help="Rotation grid step in degrees; must divide 360.")
@click.option("--mask", "mask_path", type=click.Path(), default=None,
              help="Prior kept-region mask (PGM); candidate centers are its "
                   "nonzero interior pixels at every ladder size. Default: "
                   "run the screen first.")
def cmd_match(image, template, angle_step, mask_path, **flags) -> None:
    """Find TEMPLATE in IMAGE via screened NCC; prints the best hypothesis."""
    cli_cfg = CliConfig(angle_step=angle_step, **flags)
    cfg = cli_cfg.screening()
    img = _load_image(image)
    tpl = _load_image(template)
    if mask_path is None:
        result = screen(img, tpl, cfg)
    else:
        mask = load_pgm(mask_path) > 0
        if mask.shape != img.shape:
            raise click.UsageError(
                f"mask size {mask.shape[1]}x{mask.shape[0]} does not match "
                f"image {img.shape[1]}x{img.shape[0]}"
            )
        result = _result_from_mask(img, tpl, mask, cfg)
    match = match_candidates(img, tpl, result, angle_step=angle_step)
    if match is None:
        click.echo(json.dumps({"match": None, "candidates": 0}, sort_keys=True))
        return
    payload = {
        "match": {
            "cx": match.cx,
            "cy": match.cy,
            "scale": match.scale,
            "angle": match.angle,
            "score": match.score,
        },
        "candidates": len(result.candidates),
    }
    click.echo(json.dumps(payload, sort_keys=True))


def _result_from_mask(
    img: np.ndarray, tpl: np.ndarray, mask: np.ndarray, cfg: ScreeningConfig
) -> ScreeningResult:
    """Wrap an externally provided kept mask as a candidate set."""
    from .features import patch_center_margins
    from .screening import PruneStats

    h, w = img.shape
    n = tpl.shape[0]
    ladder = ladder_sizes(n, cfg)
    candidates = []
    for m in ladder:
        lo, hi = patch_center_margins(m)
        ys, xs = np.nonzero(mask[lo : h - hi, lo : w - hi])
        candidates.extend((int(x + lo), int(y + lo), m) for y, x in zip(ys, xs))
    return ScreeningResult(
        width=w,
        height=h,
        template_side=n,
        config=cfg,
        ladder=ladder,
        candidates=candidates,
        size_masks={},
        region_mask=mask,
        stats=PruneStats(0, len(candidates), int(mask.sum()), w * h, 0.0),
    )


@cli.command("synth")
@click.argument("image", type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--template-side", type=int, default=32, show_default=True)
@click.option("--scale-min", type=float, default=0.5, show_default=True)
@click.option("--scale-max", type=float, default=2.0, show_default=True)
@click.option("--std-threshold", type=float, default=20.0, show_default=True,
              help="Minimum template standard deviation to accept a draw.")
@click.option("--out-template", type=click.Path(), required=True,
              help="Where to write the extracted template (PGM).")
@click.option("--out-truth", type=click.Path(), required=True,
              help="Where to write the ground truth (JSON).")
def cmd_synth(image, seed, template_side, scale_min, scale_max, std_threshold,
              out_template, out_truth) -> None:
    """Extract a hidden-template benchmark case from IMAGE."""
    img = _load_image(image)
    tpl, truth = make_case(
        img,
        seed,
        scale_range=(scale_min, scale_max),
        std_threshold=std_threshold,
        out_side=template_side,
    )
    save_pgm(out_template, tpl)
    write_json_atomic(out_truth, truth.to_dict())
    click.echo(json.dumps(truth.to_dict(), sort_keys=True))


@cli.command("bench")
@click.argument("dataset", type=click.Path())
@_config_options
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cases-per-image", type=int, default=2, show_default=True)
@click.option("--template-side", type=int, default=32, show_default=True)
@click.option("--scale-min", type=float, default=0.5, show_default=True)
@click.option("--scale-max", type=float, default=2.0, show_default=True)
@click.option("--with-match/--no-match", default=False, show_default=True,
              help="Also run the NCC second stage per case.")
@click.option("--angle-step", type=float, default=10.0, show_default=True)
@click.option("--out-report", type=click.Path(), default=None,
              help="Write the full report here (JSON).")
def cmd_bench(dataset, seed, cases_per_image, template_side, scale_min, scale_max,
              with_match, angle_step, out_report, **flags) -> None:
    """Benchmark the screen over a directory of PGM images."""
    cli_cfg = CliConfig(seed=seed, angle_step=angle_step, **flags)
    cfg = cli_cfg.screening()
    report = run_benchmark(
        dataset,
        cfg,
        cases_per_image=cases_per_image,
        seed=seed,
        template_side=template_side,
        scale_range=(scale_min, scale_max),
        with_match=with_match,
        angle_step=angle_step,
    )
    if out_report:
        report.save(out_report)
    agg = report.aggregates()
    click.echo(json.dumps(agg, sort_keys=True))


def main(argv: Optional[list] = None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (FlatTemplateError, CaseGenerationError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DEGENERATE
    except PgmError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_IO
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_IO
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
