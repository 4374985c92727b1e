"""Visible artifact production: mask overlays, labeled boxes, bundles.

Rendering is deliberately dependency-free and integer-exact so that a
bundle built twice from the same inputs is byte-identical, which is what
lets the service treat completed artifacts as immutable cache entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import videoio
from ._font5x7 import GLYPH_ADVANCE, GLYPH_HEIGHT, GLYPHS
from .core import (
    ArtefactClass,
    Frame,
    FrameAnnotation,
    FrameSequence,
    GeometryMismatch,
    LuskitError,
    promote_to_rgb,
)
from .summarizer import SummaryResult

# Distinct overlay colors per class.
DEFAULT_PALETTE: dict[ArtefactClass, tuple[int, int, int]] = {
    ArtefactClass.PLEURA: (0, 200, 0),
    ArtefactClass.B_LINE: (220, 0, 0),
    ArtefactClass.CONSOLIDATION: (230, 140, 0),
    ArtefactClass.SHADOW: (0, 90, 220),
    ArtefactClass.A_LINE: (0, 200, 200),
    ArtefactClass.RIB: (200, 0, 200),
}

# Masks blend in this fixed order; later classes overdraw earlier ones.
SEGMENTATION_ORDER = (
    ArtefactClass.PLEURA,
    ArtefactClass.SHADOW,
    ArtefactClass.CONSOLIDATION,
    ArtefactClass.B_LINE,
)

VARIANTS = ("summarized", "segmented", "tagged")


class AnnotationMismatch(LuskitError):
    """Annotations do not cover exactly the summary's keyframes."""


@dataclass(frozen=True)
class OverlayStyle:
    colors: Mapping[ArtefactClass, tuple[int, int, int]] = field(
        default_factory=lambda: dict(DEFAULT_PALETTE)
    )
    mask_alpha: float = 0.45
    box_thickness: int = 2

    def __post_init__(self):
        if not (0.0 < self.mask_alpha <= 1.0):
            raise ValueError(f"mask_alpha must lie in (0, 1], got {self.mask_alpha}")
        if self.box_thickness < 1:
            raise ValueError("box_thickness must be >= 1")
        colors = dict(self.colors)
        if set(colors) != set(ArtefactClass):
            raise ValueError("style must assign a color to every artefact class")
        if len(set(colors.values())) != len(ArtefactClass):
            raise ValueError("class colors must be distinct")
        object.__setattr__(self, "colors", MappingProxyType(colors))

    def label_for(self, cls: ArtefactClass, confidence: float) -> str:
        return f"{cls.value} {confidence:.2f}"


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def render_segmentation(
    frame: Frame, ann: FrameAnnotation, style: OverlayStyle | None = None
) -> np.ndarray:
    """Blend class masks over the frame; returns a new (h, w, 3) array."""
    style = style or OverlayStyle()
    ann.validate_geometry(frame.width, frame.height)
    out = promote_to_rgb(frame.pixels)
    a = style.mask_alpha
    for cls in SEGMENTATION_ORDER:
        seg = ann.mask_for(cls)
        if seg is None:
            continue
        color = np.array(style.colors[cls], dtype=np.float64)
        base = out[seg.mask].astype(np.float64)
        out[seg.mask] = _round_half_up((1.0 - a) * base + a * color).astype(np.uint8)
    return out


def _draw_text(img: np.ndarray, text: str, x: int, y: int, color) -> None:
    h, w = img.shape[:2]
    for ch in text:
        glyph = GLYPHS.get(ch)
        if glyph is not None:
            for r, c in glyph:
                yy, xx = y + r, x + c
                if 0 <= yy < h and 0 <= xx < w:
                    img[yy, xx] = color
        x += GLYPH_ADVANCE


def _draw_rect(img: np.ndarray, bbox, color, thickness: int) -> None:
    x, y, bw, bh = bbox
    t = min(thickness, (bw + 1) // 2, (bh + 1) // 2)
    img[y:y + t, x:x + bw] = color
    img[y + bh - t:y + bh, x:x + bw] = color
    img[y:y + bh, x:x + t] = color
    img[y:y + bh, x + bw - t:x + bw] = color


def render_tagging(
    frame: Frame, ann: FrameAnnotation, style: OverlayStyle | None = None
) -> np.ndarray:
    """Draw labeled, confidence-scored boxes; returns a new (h, w, 3) array."""
    style = style or OverlayStyle()
    ann.validate_geometry(frame.width, frame.height)
    out = promote_to_rgb(frame.pixels)
    for det in ann.detections:
        color = np.array(style.colors[det.cls], dtype=np.uint8)
        _draw_rect(out, det.bbox, color, style.box_thickness)
        x, y, _, bh = det.bbox
        label_y = y - GLYPH_HEIGHT - 1
        if label_y < 0:
            label_y = y + bh + 1
        _draw_text(out, style.label_for(det.cls, det.confidence), x, label_y, color)
    return out


@dataclass(frozen=True)
class AnalysisBundle:
    """The immutable per-video artifact set.

    artifacts maps bundle-relative names (summarized.avi, segmented.avi,
    tagged.avi, annotations.json, keyframes/frame_{i}_{variant}.png) to
    their exact bytes.
    """

    video_name: str
    fps: float
    keyframe_indices: tuple[int, ...]
    abnormal_indices: tuple[int, ...]
    artifacts: Mapping[str, bytes]

    def __post_init__(self):
        object.__setattr__(self, "artifacts", MappingProxyType(dict(self.artifacts)))

    def is_abnormal(self, index: int) -> bool:
        return index in self.abnormal_indices

    @staticmethod
    def keyframe_artifact(index: int, variant: str) -> str:
        return f"keyframes/frame_{index}_{variant}.png"


def annotations_json(video_name: str, fps: float, anns: list[FrameAnnotation]) -> bytes:
    doc = {
        "video": video_name,
        "fps": fps,
        "keyframes": [a.to_json() for a in anns],
    }
    return (json.dumps(doc, indent=2) + "\n").encode()


def build_bundle(
    seq: FrameSequence,
    summary: SummaryResult,
    anns: Mapping[int, FrameAnnotation],
    style: OverlayStyle | None = None,
) -> AnalysisBundle:
    """Assemble the summarized/segmented/tagged videos, per-keyframe stills
    in all three variants, and the annotations JSON."""
    style = style or OverlayStyle()
    if set(anns) != set(summary.keyframe_indices):
        raise AnnotationMismatch(
            f"annotations cover {sorted(anns)}, summary selected "
            f"{list(summary.keyframe_indices)}"
        )

    artifacts: dict[str, bytes] = {}
    plain, segmented, tagged = [], [], []
    ordered_anns = []
    for idx in summary.keyframe_indices:
        frame = seq.frames[idx]
        ann = anns[idx]
        ordered_anns.append(ann)
        seg = render_segmentation(frame, ann, style)
        tag = render_tagging(frame, ann, style)
        plain.append(frame.pixels)
        segmented.append(seg)
        tagged.append(tag)
        artifacts[AnalysisBundle.keyframe_artifact(idx, "summarized")] = videoio.encode_png(frame)
        artifacts[AnalysisBundle.keyframe_artifact(idx, "segmented")] = videoio.encode_png(seg)
        artifacts[AnalysisBundle.keyframe_artifact(idx, "tagged")] = videoio.encode_png(tag)

    artifacts["summarized.avi"] = videoio.encode_video(plain, fps=seq.fps)
    artifacts["segmented.avi"] = videoio.encode_video(segmented, fps=seq.fps)
    artifacts["tagged.avi"] = videoio.encode_video(tagged, fps=seq.fps)
    artifacts["annotations.json"] = annotations_json(seq.source_name, seq.fps, ordered_anns)

    return AnalysisBundle(
        video_name=seq.source_name,
        fps=seq.fps,
        keyframe_indices=tuple(summary.keyframe_indices),
        abnormal_indices=tuple(a.frame_index for a in ordered_anns if a.abnormal),
        artifacts=artifacts,
    )
