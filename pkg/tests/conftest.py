"""Shared test helpers: phantom spec sampling, box IoU, selection oracle."""

from __future__ import annotations

import numpy as np
import pytest

from luskit.core import ArtefactClass
from luskit.phantom import PhantomSpec
from luskit.summarizer import SummarizerParams, distance


def bbox_iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union else 0.0


def dets_of(annotation, cls: ArtefactClass):
    return [d for d in annotation.detections if d.cls is cls]


def brute_force_selection(features, params: SummarizerParams) -> list[int]:
    """Independent farthest-point oracle: min distances recomputed from
    scratch with the scalar distance() at every step."""
    n = len(features)
    resolved = params.resolve(n)
    selected = [0]
    while True:
        if len(selected) == n:
            break
        best_i, best_d = None, -1.0
        for i in range(n):
            if i in selected:
                continue
            md = min(distance(features[i], features[s]) for s in selected)
            if md > best_d:  # strictly greater keeps the lowest index on ties
                best_i, best_d = i, md
        if len(selected) >= resolved.k_min and best_d < resolved.tau:
            break
        if len(selected) >= resolved.k_max:
            break
        selected.append(best_i)
    return selected


def _interval_free(lo: int, hi: int, taken: list[tuple[int, int]], margin: int) -> bool:
    return all(hi < t_lo - margin or lo > t_hi + margin for t_lo, t_hi in taken)


def sample_phantom_spec(rng: np.random.Generator, *, with_pleura: bool = True,
                        max_frames: int = 8) -> PhantomSpec:
    """A random but analyzable phantom: artefacts inside legal bands and
    spatially separated so the ground truth stays unambiguous."""
    w = int(rng.choice([64, 96, 128, 160, 192, 256]))
    h = int(rng.choice([64, 96, 128, 160, 192]))
    n_frames = int(rng.integers(2, max_frames + 1))
    drift = int(rng.choice([-1, 0, 0, 1]))
    lo, hi = h // 8, h // 2
    # leave drift room inside the legal pleura band
    span = abs(drift) * (n_frames - 1)
    pleura = int(rng.integers(lo + (span if drift < 0 else 0),
                              hi - (span if drift > 0 else 0) + 1))
    p_max = max(pleura, pleura + drift * (n_frames - 1))

    if not with_pleura:
        return PhantomSpec(
            width=w, height=h, pleura_row=pleura, include_pleura=False,
            noise_seed=int(rng.integers(0, 2**32)), n_frames=n_frames,
            drift_px_per_frame=drift,
        )

    aline_count = 0
    if rng.random() < 0.6:
        aline_count = 1 if (p_max * 3 + 2 < h) else 0
        if aline_count and rng.random() < 0.4 and p_max * 4 + 2 < h:
            aline_count = 2

    taken_cols: list[tuple[int, int]] = []
    shadow_cols = []
    if rng.random() < 0.5:
        width = int(rng.integers(6, 13))
        c0 = int(rng.integers(2, w - width - 2))
        shadow_cols.append((c0, c0 + width - 1))
        taken_cols.append((c0, c0 + width - 1))

    bline_cols = []
    if rng.random() < 0.6:
        for _ in range(int(rng.integers(1, 3))):
            for _attempt in range(20):
                c = int(rng.integers(4, w - 4))
                if _interval_free(c, c, taken_cols, margin=6):
                    bline_cols.append(c)
                    taken_cols.append((c, c))
                    break

    consolidation_rects = []
    if rng.random() < 0.4:
        cw = int(rng.integers(max(10, w // 8), max(12, w // 4)))
        ch = int(rng.integers(max(8, h // 10), max(10, h // 5)))
        cw = min(cw, 6 * ch)  # keep blob-like, detectable aspect
        y_lo, y_hi = p_max + 4, h - ch - 1
        if y_hi > y_lo:
            for _attempt in range(20):
                x = int(rng.integers(1, w - cw - 1))
                if _interval_free(x, x + cw, taken_cols, margin=4):
                    y = int(rng.integers(y_lo, y_hi + 1))
                    consolidation_rects.append((x, y, cw, ch))
                    break

    return PhantomSpec(
        width=w, height=h, pleura_row=pleura, aline_count=aline_count,
        bline_cols=tuple(bline_cols), shadow_cols=tuple(shadow_cols),
        consolidation_rects=tuple(consolidation_rects),
        noise_seed=int(rng.integers(0, 2**32)), n_frames=n_frames,
        drift_px_per_frame=drift,
    )


@pytest.fixture()
def tiny_phantom():
    from luskit.phantom import generate

    spec = PhantomSpec(width=64, height=64, pleura_row=16, aline_count=1,
                       bline_cols=(40,), noise_seed=7, n_frames=6)
    return generate(spec)
