"""Synthetic lung ultrasound clips with known artefact placement.

The generator renders the six artefact classes onto a speckled
background, so detector behavior can be scored against exact ground
truth instead of hand-labeled clips. Output is deterministic for a
given spec: the speckle field is a counter-mode splitmix64 stream keyed
by (noise_seed, frame, pixel).

Intensity model, pre-speckle (every structure is then multiplied by the
same 0.7 + 0.6 u speckle field and clamped to [0, 255]):

* background 60
* pleura 230, 3 px thick, drifting vertically per frame when requested
* A-line k at (k+1) x pleural depth, brightness decaying by 0.6 per order
* B-lines 200, 3 px wide rays from the pleura to the bottom edge
* acoustic shadows multiply their columns by 0.25 (<= 30 % background),
  occluding the pleura, with a bright rib blob sitting on the shadow top
* consolidations 130, speckle-textured rects below the pleura
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analyzer import flag_frame
from .core import (
    ArtefactClass,
    Detection,
    Frame,
    FrameAnnotation,
    FrameSequence,
    LuskitError,
    SegMask,
)
from .rng import uniform_field

BG_BASE = 60.0
PLEURA_BASE = 230.0
ALINE_DECAY = 0.6
BLINE_BASE = 200.0
RIB_BASE = 220.0
CONSOLIDATION_BASE = 130.0
SHADOW_ATTENUATION = 0.25
PLEURA_THICKNESS = 3
RIB_HEIGHT = 5
DEFAULT_PHANTOM_FPS = 20.0


class SpecOutOfBounds(LuskitError):
    """A PhantomSpec places structure outside the frame or the legal bands."""


@dataclass(frozen=True)
class PhantomSpec:
    """Placement plan for one synthetic clip.

    include_pleura=False produces a pleura-free clip (no pleura, no
    A-lines) for false-positive testing; the pleura_row field then only
    anchors B-line and shadow geometry.
    """

    width: int
    height: int
    pleura_row: int
    aline_count: int = 0
    bline_cols: tuple[int, ...] = ()
    shadow_cols: tuple[tuple[int, int], ...] = ()
    consolidation_rects: tuple[tuple[int, int, int, int], ...] = ()
    noise_seed: int = 0
    n_frames: int = 1
    drift_px_per_frame: int = 0
    include_pleura: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bline_cols", tuple(int(c) for c in self.bline_cols))
        object.__setattr__(
            self, "shadow_cols", tuple((int(a), int(b)) for a, b in self.shadow_cols)
        )
        object.__setattr__(
            self,
            "consolidation_rects",
            tuple(tuple(int(v) for v in r) for r in self.consolidation_rects),
        )
        self._validate()

    def pleura_row_at(self, t: int) -> int:
        return self.pleura_row + t * self.drift_px_per_frame

    def _validate(self):
        w, h = self.width, self.height
        if w < 32 or h < 32:
            raise SpecOutOfBounds(f"phantom must be at least 32x32, got {w}x{h}")
        if self.n_frames < 1:
            raise SpecOutOfBounds("n_frames must be >= 1")
        if self.noise_seed < 0:
            raise SpecOutOfBounds("noise_seed must be >= 0")
        lo, hi = h // 8, h // 2
        # the drifting pleura must stay inside the canonical search band on
        # every frame, otherwise the clip is not a fair detector oracle
        for t in (0, self.n_frames - 1):
            p = self.pleura_row_at(t)
            if not (lo <= p <= hi):
                raise SpecOutOfBounds(
                    f"pleura row {p} at frame {t} outside [{lo}, {hi}] (height/8..height/2)"
                )
            for k in range(1, self.aline_count + 1):
                bottom = p * (k + 1) + PLEURA_THICKNESS // 2
                if bottom >= h:
                    raise SpecOutOfBounds(
                        f"A-line {k} at row {p * (k + 1)} (frame {t}) reaches past height {h}"
                    )
        if self.aline_count < 0:
            raise SpecOutOfBounds("aline_count must be >= 0")
        for c in self.bline_cols:
            if not (2 <= c <= w - 3):
                raise SpecOutOfBounds(f"B-line column {c} too close to the frame edge")
        for c0, c1 in self.shadow_cols:
            if not (0 <= c0 <= c1 <= w - 1):
                raise SpecOutOfBounds(f"shadow band ({c0}, {c1}) outside frame columns")
        p_max = max(self.pleura_row_at(0), self.pleura_row_at(self.n_frames - 1))
        for x, y, rw, rh in self.consolidation_rects:
            if rw < 1 or rh < 1 or x < 0 or y < 0 or x + rw > w or y + rh > h:
                raise SpecOutOfBounds(f"consolidation rect {(x, y, rw, rh)} outside frame")
            if y < p_max + 2:
                raise SpecOutOfBounds(
                    f"consolidation rect {(x, y, rw, rh)} must sit below the pleural band"
                )

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "pleura_row": self.pleura_row,
            "aline_count": self.aline_count,
            "bline_cols": list(self.bline_cols),
            "shadow_cols": [list(s) for s in self.shadow_cols],
            "consolidation_rects": [list(r) for r in self.consolidation_rects],
            "noise_seed": self.noise_seed,
            "n_frames": self.n_frames,
            "drift_px_per_frame": self.drift_px_per_frame,
            "include_pleura": self.include_pleura,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PhantomSpec":
        kwargs = dict(obj)
        kwargs["bline_cols"] = tuple(kwargs.get("bline_cols", ()))
        kwargs["shadow_cols"] = tuple(tuple(s) for s in kwargs.get("shadow_cols", ()))
        kwargs["consolidation_rects"] = tuple(
            tuple(r) for r in kwargs.get("consolidation_rects", ())
        )
        return cls(**kwargs)


def _ellipse_mask(h: int, w: int, rows: tuple[int, int], cols: tuple[int, int]) -> np.ndarray:
    """Filled ellipse inscribed in the half-open row/col box."""
    r0, r1 = rows
    c0, c1 = cols
    cy, cx = (r0 + r1 - 1) / 2.0, (c0 + c1 - 1) / 2.0
    ry, rx = max((r1 - r0) / 2.0, 0.5), max((c1 - c0) / 2.0, 0.5)
    yy, xx = np.mgrid[0:h, 0:w]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def generate(spec: PhantomSpec) -> tuple[FrameSequence, list[FrameAnnotation]]:
    """Render the clip and its per-frame ground-truth annotations."""
    w, h = spec.width, spec.height
    frames = []
    annotations = []
    for t in range(spec.n_frames):
        base = np.full((h, w), BG_BASE, dtype=np.float64)
        p = spec.pleura_row_at(t)
        detections: list[Detection] = []
        class_masks: dict[ArtefactClass, np.ndarray] = {}

        def add(cls, bbox, mask):
            detections.append(Detection(cls=cls, bbox=bbox, confidence=1.0))
            if cls in class_masks:
                class_masks[cls] |= mask
            else:
                class_masks[cls] = mask

        if spec.include_pleura:
            for k in range(1, spec.aline_count + 1):
                row = p * (k + 1)
                base[row - 1:row + 2, :] = PLEURA_BASE * (ALINE_DECAY ** k)
                m = np.zeros((h, w), bool)
                m[row - 1:row + 2, :] = True
                add(ArtefactClass.A_LINE, (0, row - 1, w, PLEURA_THICKNESS), m)

        # consolidated tissue abolishes reverberation, so rects paint over
        # any A-line crossing them
        for x, y, rw, rh in spec.consolidation_rects:
            base[y:y + rh, x:x + rw] = CONSOLIDATION_BASE
            m = np.zeros((h, w), bool)
            m[y:y + rh, x:x + rw] = True
            add(ArtefactClass.CONSOLIDATION, (x, y, rw, rh), m)

        for c in spec.bline_cols:
            base[p:, c - 1:c + 2] = BLINE_BASE
            m = np.zeros((h, w), bool)
            m[p:, c - 1:c + 2] = True
            add(ArtefactClass.B_LINE, (c - 2, p, 5, h - p), m)

        if spec.include_pleura:
            base[p - 1:p + 2, :] = PLEURA_BASE
            m = np.zeros((h, w), bool)
            m[p - 1:p + 2, :] = True
            add(ArtefactClass.PLEURA, (0, p - 1, w, PLEURA_THICKNESS), m)

        for c0, c1 in spec.shadow_cols:
            # the shadowed columns are not insonated at all below the rib,
            # so the shadow blanks structure (pleura included), it does not
            # merely dim it
            top = p - 1
            base[top:, c0:c1 + 1] = BG_BASE * SHADOW_ATTENUATION
            m = np.zeros((h, w), bool)
            m[top:, c0:c1 + 1] = True
            add(ArtefactClass.SHADOW, (c0, top, c1 - c0 + 1, h - top), m)
            rib_top = max(0, top - RIB_HEIGHT)
            if rib_top < top:
                rib = _ellipse_mask(h, w, (rib_top, top), (c0, c1 + 1))
                base[rib] = RIB_BASE
                add(ArtefactClass.RIB, (c0, rib_top, c1 - c0 + 1, top - rib_top), rib)

        u = uniform_field(spec.noise_seed, t * w * h, w * h).reshape(h, w)
        speckled = base * (0.7 + 0.6 * u)
        pixels = np.clip(np.floor(speckled + 0.5), 0, 255).astype(np.uint8)
        frames.append(pixels)

        masks = tuple(
            SegMask(cls=cls, mask=class_masks[cls])
            for cls in ArtefactClass
            if cls in class_masks
        )
        annotations.append(
            FrameAnnotation(
                frame_index=t,
                detections=tuple(detections),
                masks=masks,
                abnormal=flag_frame(detections, 0.5),
            )
        )

    seq = FrameSequence.from_arrays(frames, fps=DEFAULT_PHANTOM_FPS, source_name="phantom")
    return seq, annotations
