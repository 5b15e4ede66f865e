"""Second stage: exact NCC matching over screened candidates.

The screen hands over (cx, cy, m) hypotheses; this module settles them
with zero-mean normalized cross-correlation. Rotation hypotheses rotate
the template (small) rather than the image, and the pixels a rotation
pulls from outside the template are excluded from the correlation
support, so fill values never bias the score.

full_search_ncc is the unscreened baseline: the same hypothesis grid
evaluated at every interior position, FFT-accelerated. It exists so the
two-stage pipeline can be compared against brute force on equal terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve

from .image_io import _rotate_with_mask, as_gray, resize_bilinear
from .screening import ScreeningResult

_VAR_EPS = 1e-9


@dataclass(frozen=True)
class MatchResult:
    """Best hypothesis found; ties broken by (scale, angle, cy, cx) ascending."""

    cx: int
    cy: int
    scale: float
    angle: float
    score: float


def _angle_grid(angle_step: float) -> List[float]:
    if angle_step <= 0:
        raise ValueError("angle_step must be positive")
    steps = 360.0 / angle_step
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError(f"angle_step must divide 360, got {angle_step}")
    return [i * angle_step for i in range(int(round(steps)))]


def _window_bounds(cx: int, cy: int, pw: int, ph: int) -> Tuple[int, int]:
    return cx - (pw - 1) // 2, cy - (ph - 1) // 2


def ncc_score(
    image: np.ndarray,
    probe: np.ndarray,
    cx: int,
    cy: int,
    mask: Optional[np.ndarray] = None,
) -> float:
    """Zero-mean NCC between probe and the image window centered at
    (cx, cy); 0.0 when either side has zero variance.

    mask optionally restricts the support to probe pixels where it is
    True (used internally to drop rotation fill); default is the whole
    probe.
    """
    img = as_gray(image)
    prb = as_gray(probe)
    ph, pw = prb.shape
    h, w = img.shape
    x0, y0 = _window_bounds(cx, cy, pw, ph)
    if x0 < 0 or y0 < 0 or x0 + pw > w or y0 + ph > h:
        raise ValueError(f"probe window at ({cx}, {cy}) leaves the image")
    win = img[y0 : y0 + ph, x0 : x0 + pw].astype(np.float64)
    prf = prb.astype(np.float64)
    if mask is not None:
        if mask.shape != prb.shape:
            raise ValueError("mask shape must match probe shape")
        sel = mask.astype(bool)
        a = win[sel]
        b = prf[sel]
    else:
        a = win.reshape(-1)
        b = prf.reshape(-1)
    nm = a.size
    if nm == 0:
        return 0.0
    a_sum = a.sum()
    b_sum = b.sum()
    var_a = (a * a).sum() - a_sum * a_sum / nm
    var_b = (b * b).sum() - b_sum * b_sum / nm
    if var_a <= _VAR_EPS or var_b <= _VAR_EPS:
        return 0.0
    num = (a * b).sum() - a_sum * b_sum / nm
    return float(num / math.sqrt(var_a * var_b))


def _rotated_probes(template: np.ndarray, m: int, angles: Sequence[float]):
    """Yield (angle, probe, support_mask) with rotation fill excluded."""
    base = resize_bilinear(template, m, m)
    for angle in angles:
        probe, inside = _rotate_with_mask(base, angle, fill=0)
        yield angle, probe, inside


def _match_one_size(
    img_f: np.ndarray,
    cxs: np.ndarray,
    cys: np.ndarray,
    template: np.ndarray,
    m: int,
    angles: Sequence[float],
    chunk_elems: int = 8_000_000,
) -> Tuple[float, int, int]:
    """Best masked NCC over all (candidate, angle) pairs at one size.

    Every angle shares a candidate's m x m window, so the window block
    is gathered once and all angles are evaluated together as matrix
    products against the stacked masked probes and support masks.
    Returns (score, angle_index, candidate_index) with exact ties
    resolved to the smallest (angle_index, candidate_index).
    """
    m2 = m * m
    na = len(angles)
    probes = np.empty((na, m2), dtype=np.float64)
    masks = np.empty((na, m2), dtype=np.float64)
    for i, (_, probe, support) in enumerate(_rotated_probes(template, m, angles)):
        sel = support.reshape(-1)
        probes[i] = probe.reshape(-1) * sel
        masks[i] = sel
    nm = masks.sum(axis=1)
    b_sum = probes.sum(axis=1)
    var_b = (probes * probes).sum(axis=1) - b_sum * b_sum / nm
    live = var_b > _VAR_EPS

    right = np.concatenate([probes, masks]).T  # (m2, 2 * na)
    masks_t = masks.T
    lo = (m - 1) // 2
    windows = np.lib.stride_tricks.sliding_window_view(img_f, (m, m))
    best_score = -np.inf
    best_angle = 0
    best_cand = 0
    chunk = max(1, chunk_elems // m2)
    for s in range(0, cxs.size, chunk):
        e = min(s + chunk, cxs.size)
        w = windows[cys[s:e] - lo, cxs[s:e] - lo].reshape(e - s, m2)
        both = w @ right
        ab = both[:, :na]
        a_sum = both[:, na:]
        a_ss = (w * w) @ masks_t
        var_a = a_ss - a_sum * a_sum / nm
        ok = (var_a > _VAR_EPS) & live
        num = ab - a_sum * (b_sum / nm)
        denom = np.sqrt(np.where(ok, var_a * var_b, 1.0))
        scores = np.where(ok, num / denom, 0.0)
        cand_idx = np.argmax(scores, axis=0)
        top = scores[cand_idx, np.arange(na)]
        for a in range(na):
            sc = float(top[a])
            cand = s + int(cand_idx[a])
            if sc > best_score or (sc == best_score and (a, cand) < (best_angle, best_cand)):
                best_score = sc
                best_angle = a
                best_cand = cand
    return best_score, best_angle, best_cand


def match_candidates(
    image: np.ndarray,
    template: np.ndarray,
    screened: ScreeningResult,
    angle_step: float = 10.0,
) -> Optional[MatchResult]:
    """Evaluate every screened candidate over the angle grid
    {0, step, ..., 360 - step} and return the best hypothesis.

    Returns None for an empty candidate set. The winner is the highest
    score; exact ties go to the smallest (scale, angle, cy, cx).
    """
    img = as_gray(image)
    tpl = as_gray(template)
    angles = _angle_grid(angle_step)
    if not screened.candidates:
        return None
    n = tpl.shape[0]
    by_size: Dict[int, List[Tuple[int, int]]] = {}
    for cx, cy, m in screened.candidates:
        by_size.setdefault(m, []).append((cx, cy))
    img_f = img.astype(np.float64)
    best: Optional[MatchResult] = None
    for m in sorted(by_size):
        pts = by_size[m]
        cxs = np.array([p[0] for p in pts], dtype=np.int64)
        cys = np.array([p[1] for p in pts], dtype=np.int64)
        score, angle_idx, cand_idx = _match_one_size(img_f, cxs, cys, tpl, m, angles)
        if best is None or score > best.score:
            best = MatchResult(
                cx=int(cxs[cand_idx]),
                cy=int(cys[cand_idx]),
                scale=m / n,
                angle=angles[angle_idx],
                score=score,
            )
    return best


def full_search_ncc(
    image: np.ndarray,
    template: np.ndarray,
    sizes: Sequence[int],
    angle_step: float = 10.0,
) -> Optional[MatchResult]:
    """Brute-force baseline: masked NCC of every rotation/size
    hypothesis at every interior center, via FFT correlation.

    Same hypothesis grid and tie-break as match_candidates, so the two
    are directly comparable; only the screening is missing.
    """
    img = as_gray(image)
    tpl = as_gray(template)
    angles = _angle_grid(angle_step)
    h, w = img.shape
    n = tpl.shape[0]
    img_f = img.astype(np.float64)
    img_sq = img_f * img_f
    best: Optional[MatchResult] = None
    for m in sorted(set(int(s) for s in sizes)):
        if m < 1 or m > h or m > w:
            continue
        lo = (m - 1) // 2
        for angle, probe, support in _rotated_probes(tpl, m, angles):
            sel = support.astype(np.float64)
            b = probe.astype(np.float64) * sel
            nm = sel.sum()
            if nm == 0:
                continue
            b_sum = b.sum()
            var_b = (b * b).sum() - b_sum * b_sum / nm
            if var_b <= _VAR_EPS:
                continue
            flip_sel = sel[::-1, ::-1]
            flip_b = b[::-1, ::-1]
            a_sum = fftconvolve(img_f, flip_sel, mode="valid")
            a_sq = fftconvolve(img_sq, flip_sel, mode="valid")
            ab = fftconvolve(img_f, flip_b, mode="valid")
            var_a = np.maximum(a_sq - a_sum * a_sum / nm, 0.0)
            num = ab - a_sum * (b_sum / nm)
            # FFT roundoff leaves noise where the window is flat; treat
            # near-zero variance as zero correlation
            ok = var_a > 1e-3
            denom = np.sqrt(np.where(ok, var_a * var_b, 1.0))
            scores = np.where(ok, num / denom, 0.0)
            np.clip(scores, -1.0, 1.0, out=scores)
            k = int(np.argmax(scores))
            ky, kx = divmod(k, scores.shape[1])
            if best is None or scores[ky, kx] > best.score:
                best = MatchResult(
                    cx=int(kx + lo),
                    cy=int(ky + lo),
                    scale=m / n,
                    angle=angle,
                    score=float(scores[ky, kx]),
                )
    return best
