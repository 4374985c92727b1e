"""Keyframe selection: reduce a clip to representative, non-redundant frames.

The reference algorithm is farthest-point (max-min) greedy selection on
coarse intensity features, chosen because it is deterministic and its
behavior has an obvious brute-force oracle. Distances are mean-centered
cosine, so global gain/brightness offsets between exports do not read
as novelty. Alternative summarizers (e.g. learned models) plug in by
name through the registry at the bottom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch, Frame, FrameSequence
from .rng import SeededRng

FEATURE_SIDE = 32
FEATURE_DIM = FEATURE_SIDE * FEATURE_SIDE


@dataclass(frozen=True)
class FeatureVector:
    """Flattened 32x32 downsample of a frame, scaled to [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise DimensionMismatch(f"feature vector must be 1-D, got shape {v.shape}")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SummarizerParams:
    """Selection knobs; k bounds default from the clip length at run time.

    k_max defaults to max(8, ceil(0.15 N)) and k_min to min(N, 4).
    """

    tau: float = 0.12
    k_max: int | None = None
    k_min: int | None = None

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.k_min is not None and self.k_min < 1:
            raise ValueError("k_min must be >= 1")
        if self.k_min is not None and self.k_max is not None and self.k_min > self.k_max:
            raise ValueError(f"k_min {self.k_min} exceeds k_max {self.k_max}")

    def resolve(self, n_frames: int) -> "ResolvedParams":
        k_max = self.k_max if self.k_max is not None else max(8, math.ceil(0.15 * n_frames))
        if self.k_min is not None:
            k_min = self.k_min
        else:
            k_min = min(n_frames, 4, k_max)
        if k_min > k_max:
            raise ValueError(f"k_min {k_min} exceeds k_max {k_max}")
        return ResolvedParams(tau=self.tau, k_max=k_max, k_min=k_min)


@dataclass(frozen=True)
class ResolvedParams:
    tau: float
    k_max: int
    k_min: int

    def to_json(self) -> dict:
        return {"tau": self.tau, "k_max": self.k_max, "k_min": self.k_min}


@dataclass(frozen=True)
class SummaryResult:
    """Selected keyframes plus the trace of how they were selected.

    keyframe_indices is sorted ascending; novelty is aligned with it and
    holds each frame's max-min distance at the moment it was selected
    (inf for the seed frame, which is selected against an empty set).
    selection_trace preserves the actual selection order.
    """

    keyframe_indices: tuple[int, ...]
    novelty: tuple[float, ...]
    coverage_radius: float
    params_used: ResolvedParams
    selection_trace: tuple[tuple[int, float], ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.keyframe_indices)
        if not idx:
            raise ValueError("a summary must select at least one keyframe")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"keyframe indices must be strictly increasing, got {idx}")
        object.__setattr__(self, "keyframe_indices", idx)
        object.__setattr__(self, "novelty", tuple(float(v) for v in self.novelty))
        object.__setattr__(
            self,
            "selection_trace",
            tuple((int(i), float(v)) for i, v in self.selection_trace),
        )

    def to_json(self) -> dict:
        def num(v):
            return v if math.isfinite(v) else None

        return {
            "keyframe_indices": list(self.keyframe_indices),
            "novelty": [num(v) for v in self.novelty],
            "coverage_radius": self.coverage_radius,
            "params_used": self.params_used.to_json(),
            "selection_trace": [[i, num(v)] for i, v in self.selection_trace],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SummaryResult":
        def num(v):
            return math.inf if v is None else float(v)

        return cls(
            keyframe_indices=tuple(obj["keyframe_indices"]),
            novelty=tuple(num(v) for v in obj["novelty"]),
            coverage_radius=float(obj["coverage_radius"]),
            params_used=ResolvedParams(**obj["params_used"]),
            selection_trace=tuple((i, num(v)) for i, v in obj["selection_trace"]),
        )


def validate_summary(summary: SummaryResult, n_frames: int) -> None:
    """Boundary check applied to any summarizer's output, plugins included."""
    if not isinstance(summary, SummaryResult):
        raise TypeError(f"summarizer returned {type(summary).__name__}, not SummaryResult")
    if summary.keyframe_indices[-1] >= n_frames:
        raise ValueError(
            f"keyframe index {summary.keyframe_indices[-1]} out of range for {n_frames} frames"
        )
    if summary.selection_trace and summary.selection_trace[0][0] != 0:
        raise ValueError("the first selected frame must be frame 0")
    if len(summary.novelty) != len(summary.keyframe_indices):
        raise ValueError("novelty must align with keyframe_indices")


def _bilinear_downsample(pixels: np.ndarray, side: int = FEATURE_SIDE) -> np.ndarray:
    """Bilinear resample with half-pixel-center alignment.

    Output sample (i, j) reads source coordinate ((i + 0.5) * h / side - 0.5,
    (j + 0.5) * w / side - 0.5), clamped to the frame, interpolating the four
    surrounding pixels. With an exact 2x reduction this averages adjacent
    pixel pairs, which is the sampling rule the feature tests pin down.
    """
    h, w = pixels.shape
    ys = np.clip((np.arange(side) + 0.5) * (h / side) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(side) + 0.5) * (w / side) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    p = pixels.astype(np.float64)
    top = p[np.ix_(y0, x0)] * (1.0 - fx) + p[np.ix_(y0, x1)] * fx
    bottom = p[np.ix_(y1, x0)] * (1.0 - fx) + p[np.ix_(y1, x1)] * fx
    return top * (1.0 - fy) + bottom * fy


def extract_features(frame: Frame) -> FeatureVector:
    """32x32 bilinear downsample, scaled by 255, flattened row-major."""
    small = _bilinear_downsample(frame.pixels)
    return FeatureVector(values=(small / 255.0).ravel())


def distance(a: FeatureVector, b: FeatureVector) -> float:
    """Mean-centered cosine distance in [0, 2].

    Defined as 0 when both centered vectors vanish (two flat frames look
    identical regardless of their level) and 1 when exactly one vanishes.
    """
    va, vb = a.values, b.values
    if va.shape != vb.shape:
        raise DimensionMismatch(f"feature dims differ: {va.shape} vs {vb.shape}")
    ca = va - va.mean()
    cb = vb - vb.mean()
    na = float(np.linalg.norm(ca))
    nb = float(np.linalg.norm(cb))
    if na == 0.0 and nb == 0.0:
        return 0.0
    if na == 0.0 or nb == 0.0:
        return 1.0
    return float(np.clip(1.0 - (ca @ cb) / (na * nb), 0.0, 2.0))


def _feature_matrix(features: list[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    """Centered row-normalized matrix plus a flag vector of all-zero rows."""
    raw = np.stack([f.values for f in features])
    centered = raw - raw.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return centered / safe[:, None], zero


def _distances_to(matrix: np.ndarray, zero: np.ndarray, s: int) -> np.ndarray:
    if zero[s]:
        d = np.where(zero, 0.0, 1.0)
    else:
        # 0.5 |a-b|^2 == 1 - a.b for unit rows, but is exactly 0 for
        # identical frames where the dot-product form leaves float residue
        diff = matrix - matrix[s]
        d = np.minimum(0.5 * np.einsum("ij,ij->i", diff, diff), 2.0)
        d[zero] = 1.0
    d[s] = 0.0
    return d


def summarize_features(
    features: list[FeatureVector], params: SummarizerParams | None = None
) -> SummaryResult:
    """Greedy farthest-point selection over precomputed features.

    Frame 0 seeds the selection. Each step picks the unselected frame
    farthest from the selected set (ties to the lowest index); selection
    stops once at least k_min frames are chosen and the next candidate
    would add less than tau of novelty, or k_max (or the whole clip) is
    reached.
    """
    params = params or SummarizerParams()
    n = len(features)
    resolved = params.resolve(n)
    matrix, zero = _feature_matrix(features)

    selected = [0]
    trace = [(0, math.inf)]
    is_selected = np.zeros(n, bool)
    is_selected[0] = True
    min_dist = _distances_to(matrix, zero, 0)
    while True:
        if len(selected) == n:
            break
        # argmax over unselected frames; ties resolve to the lowest index
        masked = np.where(is_selected, -1.0, min_dist)
        candidate = int(np.argmax(masked))
        d_star = float(min_dist[candidate])
        if len(selected) >= resolved.k_min and d_star < resolved.tau:
            break
        if len(selected) >= resolved.k_max:
            break
        selected.append(candidate)
        trace.append((candidate, d_star))
        is_selected[candidate] = True
        min_dist = np.minimum(min_dist, _distances_to(matrix, zero, candidate))

    coverage = 0.0
    if len(selected) < n:
        coverage = float(min_dist[~is_selected].max())

    order = sorted(range(len(selected)), key=lambda i: selected[i])
    return SummaryResult(
        keyframe_indices=tuple(selected[i] for i in order),
        novelty=tuple(trace[i][1] for i in order),
        coverage_radius=coverage,
        params_used=resolved,
        selection_trace=tuple(trace),
    )


def summarize(seq: FrameSequence, params: SummarizerParams | None = None) -> SummaryResult:
    """Select keyframes for a clip; see summarize_features for the rule."""
    return summarize_features([extract_features(f) for f in seq.frames], params)


def sample_keyframes(summary: SummaryResult, n: int, seed: int) -> list[int]:
    """Seeded uniform sample (without replacement) of the selected keyframes.

    Returns min(n, pool) indices, sorted ascending; identical seeds yield
    identical samples.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = SeededRng(seed)
    picked = rng.sample_without_replacement(list(summary.keyframe_indices), n)
    return sorted(picked)


# Summarizer implementations selectable by name in the service config.
# Contract: fn(FrameSequence, SummarizerParams | None) -> SummaryResult.
_SUMMARIZERS = {"reference": summarize}


def register_summarizer(name: str, fn) -> None:
    _SUMMARIZERS[name] = fn


def get_summarizer(name: str):
    try:
        return _SUMMARIZERS[name]
    except KeyError:
        raise KeyError(
            f"unknown summarizer {name!r}; registered: {sorted(_SUMMARIZERS)}"
        ) from None
