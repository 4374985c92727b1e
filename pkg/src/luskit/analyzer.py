"""Rule-based detection, segmentation, and abnormality flagging.

The detectors are intensity-profile heuristics scored against the
phantom oracle; they define the exact output contract (classes, box
conventions, confidence anchoring) that a trained-model plugin must
meet. Confidence formulas are anchored so that exactly meeting a
detection threshold yields 0.5 and stronger evidence saturates at 1.0.

Box conventions: pleura and A-lines are full-width bands of thickness
5 centered on the detected row; B-lines are 5-px-wide columns over the
sub-pleural rows; shadows span their dark column band over the
sub-pleural rows; consolidations are connected-component bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import ArtefactClass, Detection, Frame, FrameAnnotation, SegMask

# Contrast floor for A-line peaks relative to the sub-pleural background
# (A-lines are dimmer than the pleura; reusing pleura_min_contrast would
# reject every reverberation past the first).
ALINE_MIN_CONTRAST = 1.15
# Brightness ratio above which a blob over a shadow is read as a rib.
RIB_MIN_CONTRAST = 1.3
# Mask inclusion threshold inside a detected structure, vs. the local mean.
MASK_CONTRAST = 1.2
# Consolidation intensity band, as fractions of the pleural-band mean.
CONSOLIDATION_BAND = (0.4, 0.75)
CONSOLIDATION_MIN_AREA_FRAC = 0.01
CONSOLIDATION_FULL_CONF_AREA_FRAC = 0.05
# Bands wider than this aspect ratio are reverberation lines, not blobs.
CONSOLIDATION_MAX_ASPECT = 8.0


@dataclass(frozen=True)
class AnalyzerParams:
    pleura_min_contrast: float = 1.6
    aline_spacing_tol: float = 0.15
    bline_col_contrast: float = 1.4
    shadow_max_ratio: float = 0.35
    flag_confidence_theta: float = 0.5

    def __post_init__(self):
        for name in ("pleura_min_contrast", "aline_spacing_tol",
                     "bline_col_contrast", "shadow_max_ratio"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 <= self.flag_confidence_theta <= 1.0):
            raise ValueError("flag_confidence_theta must lie in [0,1]")

    def to_json(self) -> dict:
        return {
            "pleura_min_contrast": self.pleura_min_contrast,
            "aline_spacing_tol": self.aline_spacing_tol,
            "bline_col_contrast": self.bline_col_contrast,
            "shadow_max_ratio": self.shadow_max_ratio,
            "flag_confidence_theta": self.flag_confidence_theta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnalyzerParams":
        return cls(**obj)


def _smoothed(profile: np.ndarray, window: int = 3) -> np.ndarray:
    pad = window // 2
    padded = np.pad(profile, pad, mode="edge")
    kernel = np.full(window, 1.0 / window)
    return np.convolve(padded, kernel, mode="valid")


def _anchored_confidence(ratio: float, threshold: float) -> float:
    """Map contrast ratio to [0,1] with the detection threshold pinned at 0.5."""
    return float(np.clip(0.5 + 0.5 * (ratio - threshold) / (threshold - 1.0), 0.0, 1.0))


def _anchored_darkness(ratio: float, threshold: float) -> float:
    """Same anchoring for darkness thresholds, where lower ratio is stronger."""
    return float(np.clip(0.5 + 0.5 * (threshold - ratio) / threshold, 0.0, 1.0))


def flag_frame(detections, theta: float) -> bool:
    """True iff any B-line or consolidation meets the confidence threshold.

    A-lines indicate normal aeration; pleura, rib, and shadow are
    landmarks, so none of them flag a frame.
    """
    return any(
        d.cls in (ArtefactClass.B_LINE, ArtefactClass.CONSOLIDATION)
        and d.confidence >= theta
        for d in detections
    )


def detect_pleura(frame: Frame, p: AnalyzerParams) -> tuple[Detection, SegMask] | None:
    """Find the pleural line as the brightest row band in the upper frame."""
    px = frame.pixels.astype(np.float64)
    h, w = px.shape
    gm = float(px.mean())
    if gm <= 0:
        return None
    profile = _smoothed(px.mean(axis=1))
    lo, hi = h // 8, h // 2
    band = profile[lo:hi + 1]
    r_star = lo + int(np.argmax(band))
    ratio = profile[r_star] / gm
    if ratio < p.pleura_min_contrast:
        return None
    det = Detection(
        cls=ArtefactClass.PLEURA,
        bbox=(0, r_star - 2, w, 5),
        confidence=_anchored_confidence(ratio, p.pleura_min_contrast),
    )
    mask = np.zeros((h, w), bool)
    band_rows = px[r_star - 2:r_star + 3, :]
    mask[r_star - 2:r_star + 3, :] = band_rows > MASK_CONTRAST * gm
    return det, SegMask(cls=ArtefactClass.PLEURA, mask=mask)


def detect_alines(frame: Frame, pleura: Detection, p: AnalyzerParams) -> list[Detection]:
    """Reverberation bands near integer multiples of the pleural depth."""
    px = frame.pixels.astype(np.float64)
    h, w = px.shape
    depth = pleura.bbox[1] + 2  # band center row
    profile = _smoothed(px.mean(axis=1))
    sub_start = depth + 3
    if sub_start >= h:
        return []
    background = float(np.median(profile[sub_start:]))
    if background <= 0:
        return []

    out: list[Detection] = []
    claimed: list[int] = []
    k = 2
    while True:
        center = k * depth
        half = max(2, round(p.aline_spacing_tol * center))
        w_lo = max(sub_start, center - half)
        w_hi = min(h - 1, center + half)
        if w_lo > h - 1 or center - half > h - 1:
            break
        if w_lo > w_hi:
            k += 1
            continue
        rows = profile[w_lo:w_hi + 1]
        r_k = w_lo + int(np.argmax(rows))
        ratio = profile[r_k] / background
        is_peak = profile[r_k] >= profile[max(0, r_k - 1)] and profile[r_k] >= profile[min(h - 1, r_k + 1)]
        # reverberations run the full width; a bright compact blob that
        # happens to sit near a pleural multiple must not read as an A-line
        band3 = px[max(0, r_k - 1):r_k + 2, :].mean(axis=0)
        coverage = float((band3 > 1.05 * background).mean())
        if ratio >= ALINE_MIN_CONTRAST and is_peak and coverage >= 0.55 and all(abs(r_k - c) > 2 for c in claimed):
            conf = _anchored_confidence(ratio, ALINE_MIN_CONTRAST) * (0.8 ** (k - 1))
            y = min(max(0, r_k - 2), h - 5)
            out.append(Detection(cls=ArtefactClass.A_LINE, bbox=(0, y, w, 5), confidence=conf))
            claimed.append(r_k)
        k += 1
    return out


def _contiguous_runs(flags: np.ndarray) -> list[tuple[int, int]]:
    """(start, end) inclusive runs of True values."""
    runs = []
    start = None
    for i, v in enumerate(flags):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def detect_blines_and_shadows(
    frame: Frame, pleura: Detection | None, p: AnalyzerParams
) -> list[tuple[Detection, SegMask | None]]:
    """Column-profile detection of B-line rays, acoustic shadows, and the
    rib blobs that cap the shadows."""
    px = frame.pixels.astype(np.float64)
    h, w = px.shape
    gm = float(px.mean())
    region_top = (pleura.bbox[1] + 2 + 3) if pleura is not None else h // 3
    region = px[region_top:, :]
    if region.shape[0] < 4 or gm <= 0:
        return []
    col_profile = region.mean(axis=0)
    region_mean = float(region.mean())
    if region_mean <= 0:
        return []

    results: list[tuple[Detection, SegMask | None]] = []

    # B-lines: bright columns that persist down to the bottom edge
    bright = px[region_top:, :] > MASK_CONTRAST * region_mean
    extent = bright.mean(axis=0)
    is_ray = (col_profile >= p.bline_col_contrast * region_mean) & (extent >= 0.8)
    for c0, c1 in _contiguous_runs(is_ray):
        center = min(max((c0 + c1) // 2, 2), w - 3)
        ratio = float(col_profile[c0:c1 + 1].max()) / region_mean
        det = Detection(
            cls=ArtefactClass.B_LINE,
            bbox=(center - 2, region_top, 5, h - region_top),
            confidence=_anchored_confidence(ratio, p.bline_col_contrast),
        )
        mask = np.zeros((h, w), bool)
        cols = slice(center - 2, center + 3)
        mask[region_top:, cols] = px[region_top:, cols] > MASK_CONTRAST * region_mean
        results.append((det, SegMask(cls=ArtefactClass.B_LINE, mask=mask)))

    # Shadows: wide dark column bands; a bright blob capping the band is a rib
    is_dark = col_profile <= p.shadow_max_ratio * region_mean
    for c0, c1 in _contiguous_runs(is_dark):
        if c1 - c0 + 1 < 4:
            continue
        ratio = float(col_profile[c0:c1 + 1].mean()) / region_mean
        det = Detection(
            cls=ArtefactClass.SHADOW,
            bbox=(c0, region_top, c1 - c0 + 1, h - region_top),
            confidence=_anchored_darkness(ratio, p.shadow_max_ratio),
        )
        mask = np.zeros((h, w), bool)
        mask[region_top:, c0:c1 + 1] = True
        results.append((det, SegMask(cls=ArtefactClass.SHADOW, mask=mask)))

        rib = _find_rib(px, gm, c0, c1, region_top)
        if rib is not None:
            results.append((rib, None))
    return results


def _find_rib(
    px: np.ndarray, gm: float, c0: int, c1: int, region_top: int
) -> Detection | None:
    """Walk up the dark band to its true top; a bright blob within 3 px
    above it is the occluding rib."""
    band_rows = px[:, c0:c1 + 1].mean(axis=1)
    r = region_top - 1
    while r >= 0 and band_rows[r] <= 0.5 * gm:
        r -= 1
    true_top = r + 1
    bottom = None
    for cand in range(true_top - 1, max(-1, true_top - 4), -1):
        if cand >= 0 and band_rows[cand] >= RIB_MIN_CONTRAST * gm:
            bottom = cand
            break
    if bottom is None:
        return None
    top = bottom
    while top - 1 >= 0 and band_rows[top - 1] >= RIB_MIN_CONTRAST * gm:
        top -= 1
    ratio = float(band_rows[top:bottom + 1].mean()) / gm
    return Detection(
        cls=ArtefactClass.RIB,
        bbox=(c0, top, c1 - c0 + 1, bottom - top + 1),
        confidence=_anchored_confidence(ratio, RIB_MIN_CONTRAST),
    )


def detect_consolidation(
    frame: Frame, pleura: Detection | None, p: AnalyzerParams
) -> list[tuple[Detection, SegMask]]:
    """Mid-gray sub-pleural blobs, banded against the pleural intensity.

    Without a pleura the intensity anchor is undefined, so nothing is
    emitted; the band thresholds would swallow plain speckle.
    """
    if pleura is None:
        return []
    px = frame.pixels.astype(np.float64)
    h, w = px.shape
    gm = float(px.mean())
    r_star = pleura.bbox[1] + 2
    band = px[max(0, r_star - 2):r_star + 3, :]
    bright = band[band > MASK_CONTRAST * gm]
    # reference the actual bright pleural pixels, not the box mean: the box
    # straddles background rows and shadow gaps that would drag the band
    # thresholds down into plain speckle
    band_ref = float(bright.mean()) if bright.size else float(band.mean())
    if band_ref <= 0:
        return []
    sub_top = r_star + 3
    if sub_top >= h:
        return []

    blurred = ndimage.uniform_filter(px, size=3, mode="nearest")
    lo, hi = CONSOLIDATION_BAND
    in_band = (blurred >= lo * band_ref) & (blurred <= hi * band_ref)
    in_band[:sub_top, :] = False
    # opening removes B-line slivers and band edges; the aspect filter
    # below removes what remains of full-width reverberation bands
    opened = ndimage.binary_opening(in_band, structure=np.ones((3, 3), bool))
    labels, n = ndimage.label(opened)
    if n == 0:
        return []

    out: list[tuple[Detection, SegMask]] = []
    min_area = CONSOLIDATION_MIN_AREA_FRAC * w * h
    full_area = CONSOLIDATION_FULL_CONF_AREA_FRAC * w * h
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        comp = labels[sl] == idx
        area = int(comp.sum())
        if area < min_area:
            continue
        ch, cw = comp.shape
        if cw / ch > CONSOLIDATION_MAX_ASPECT:
            continue
        det = Detection(
            cls=ArtefactClass.CONSOLIDATION,
            bbox=(sl[1].start, sl[0].start, cw, ch),
            confidence=min(1.0, area / full_area),
        )
        mask = np.zeros((h, w), bool)
        mask[sl] = comp
        out.append((det, SegMask(cls=ArtefactClass.CONSOLIDATION, mask=mask)))
    return out


def analyze_frame(frame: Frame, p: AnalyzerParams | None = None) -> FrameAnnotation:
    """Compose all detectors into one FrameAnnotation for the frame."""
    p = p or AnalyzerParams()
    detections: list[Detection] = []
    masks: dict[ArtefactClass, np.ndarray] = {}

    def merge_mask(seg: SegMask):
        if seg.cls in masks:
            masks[seg.cls] |= seg.mask
        else:
            masks[seg.cls] = seg.mask.copy()

    pleura_hit = detect_pleura(frame, p)
    pleura = None
    if pleura_hit is not None:
        pleura, pleura_mask = pleura_hit
        detections.append(pleura)
        merge_mask(pleura_mask)
        detections.extend(detect_alines(frame, pleura, p))

    for det, seg in detect_blines_and_shadows(frame, pleura, p):
        detections.append(det)
        if seg is not None:
            merge_mask(seg)

    for det, seg in detect_consolidation(frame, pleura, p):
        detections.append(det)
        merge_mask(seg)

    seg_masks = tuple(
        SegMask(cls=cls, mask=masks[cls]) for cls in ArtefactClass if cls in masks
    )
    ann = FrameAnnotation(
        frame_index=frame.index,
        detections=tuple(detections),
        masks=seg_masks,
        abnormal=flag_frame(detections, p.flag_confidence_theta),
    )
    ann.validate_geometry(frame.width, frame.height)
    return ann


# Analyzer implementations selectable by name in the service config.
# Contract: fn(Frame, AnalyzerParams) -> FrameAnnotation; boxes and masks
# must fit the frame or the service rejects the result.
_ANALYZERS = {"reference": analyze_frame}


def register_analyzer(name: str, fn) -> None:
    _ANALYZERS[name] = fn


def get_analyzer(name: str):
    try:
        return _ANALYZERS[name]
    except KeyError:
        raise KeyError(
            f"unknown analyzer {name!r}; registered: {sorted(_ANALYZERS)}"
        ) from None
