"""Shared domain types for the lung ultrasound analysis pipeline.

Everything here is immutable after construction and safe to share across
worker threads. Frames are 8-bit grayscale; color inputs are normalized
at ingest via :func:`to_grayscale`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

MIN_FRAME_SIDE = 32


class LuskitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometry(LuskitError):
    """Frame geometry is below the minimum analyzable size or inconsistent."""


class DimensionMismatch(LuskitError):
    """Two vectors or frames that must share dimensions do not."""


class GeometryMismatch(LuskitError):
    """An annotation does not fit the frame it is applied to."""


class ArtefactClass(enum.Enum):
    """The closed set of lung ultrasound artefact classes.

    Values are the serialized (wire/JSON) names.
    """

    A_LINE = "a-line"
    B_LINE = "b-line"
    CONSOLIDATION = "consolidation"
    PLEURA = "pleura"
    RIB = "rib"
    SHADOW = "shadow"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "ArtefactClass":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown artefact class {name!r}") from None


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Frame:
    """A single grayscale frame.

    pixels is a read-only (height, width) uint8 array, row major.
    """

    width: int
    height: int
    pixels: np.ndarray
    index: int = 0
    timestamp_ms: int = 0

    def __post_init__(self):
        if self.width < MIN_FRAME_SIDE or self.height < MIN_FRAME_SIDE:
            raise InvalidGeometry(
                f"frame must be at least {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}, "
                f"got {self.width}x{self.height}"
            )
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.size != self.width * self.height:
            raise InvalidGeometry(
                f"pixel count {px.size} != width*height = {self.width * self.height}"
            )
        if self.index < 0:
            raise InvalidGeometry(f"frame index must be >= 0, got {self.index}")
        px = _as_readonly(px.reshape(self.height, self.width))
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr: np.ndarray, index: int = 0, timestamp_ms: int = 0) -> "Frame":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise InvalidGeometry(f"expected a 2-D gray array, got shape {arr.shape}")
        h, w = arr.shape
        return cls(width=w, height=h, pixels=arr.astype(np.uint8, copy=False),
                   index=index, timestamp_ms=timestamp_ms)


@dataclass(frozen=True)
class FrameSequence:
    """An ordered, geometry-uniform run of frames decoded from one video."""

    frames: tuple[Frame, ...]
    fps: float
    source_name: str = ""

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise InvalidGeometry("a FrameSequence needs at least one frame")
        if not (self.fps > 0):
            raise InvalidGeometry(f"fps must be positive, got {self.fps}")
        w, h = frames[0].width, frames[0].height
        for i, f in enumerate(frames):
            if (f.width, f.height) != (w, h):
                raise InvalidGeometry(
                    f"frame {i} is {f.width}x{f.height}, expected {w}x{h}"
                )
            if f.index != i:
                raise InvalidGeometry(
                    f"frame at position {i} carries index {f.index}; indices must be 0..N-1"
                )
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @classmethod
    def from_arrays(cls, arrays, fps: float, source_name: str = "") -> "FrameSequence":
        frames = [
            Frame.from_array(a, index=i, timestamp_ms=round(i * 1000.0 / fps))
            for i, a in enumerate(arrays)
        ]
        return cls(frames=tuple(frames), fps=fps, source_name=source_name)


@dataclass(frozen=True)
class Detection:
    """A confidence-scored labeled bounding box, (x, y, w, h) in pixels."""

    cls: ArtefactClass
    bbox: tuple[int, int, int, int]
    confidence: float

    def __post_init__(self):
        x, y, w, h = (int(v) for v in self.bbox)
        if w < 1 or h < 1:
            raise InvalidGeometry(f"bbox must be at least 1x1, got {self.bbox}")
        if x < 0 or y < 0:
            raise InvalidGeometry(f"bbox origin must be non-negative, got {self.bbox}")
        if not (0.0 <= self.confidence <= 1.0):
            raise InvalidGeometry(f"confidence must lie in [0,1], got {self.confidence}")
        object.__setattr__(self, "bbox", (x, y, w, h))

    def fits_in(self, width: int, height: int) -> bool:
        x, y, w, h = self.bbox
        return x + w <= width and y + h <= height

    def to_json(self) -> dict:
        return {
            "class": self.cls.value,
            "bbox": list(self.bbox),
            "confidence": self.confidence,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Detection":
        return cls(
            cls=ArtefactClass.parse(obj["class"]),
            bbox=tuple(obj["bbox"]),
            confidence=float(obj["confidence"]),
        )


@dataclass(frozen=True)
class SegMask:
    """A per-class binary mask with the same geometry as its frame."""

    cls: ArtefactClass
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2:
            raise GeometryMismatch(f"mask must be 2-D, got shape {m.shape}")
        object.__setattr__(self, "mask", _as_readonly(m))

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]


@dataclass(frozen=True)
class FrameAnnotation:
    """Everything the analyzer produced for one frame."""

    frame_index: int
    detections: tuple[Detection, ...] = ()
    masks: tuple[SegMask, ...] = ()
    abnormal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        masks = tuple(self.masks)
        seen = set()
        for m in masks:
            if m.cls in seen:
                raise GeometryMismatch(f"more than one mask for class {m.cls.value}")
            seen.add(m.cls)
        object.__setattr__(self, "masks", masks)

    def mask_for(self, cls: ArtefactClass) -> SegMask | None:
        for m in self.masks:
            if m.cls is cls:
                return m
        return None

    def validate_geometry(self, width: int, height: int) -> None:
        """Raise GeometryMismatch unless every box and mask fits a width x height frame."""
        for d in self.detections:
            if not d.fits_in(width, height):
                raise GeometryMismatch(
                    f"detection {d.cls.value} bbox {d.bbox} exceeds {width}x{height}"
                )
        for m in self.masks:
            if (m.height, m.width) != (height, width):
                raise GeometryMismatch(
                    f"mask for {m.cls.value} is {m.width}x{m.height}, frame is {width}x{height}"
                )

    def to_json(self) -> dict:
        return {
            "index": self.frame_index,
            "abnormal": self.abnormal,
            "detections": [d.to_json() for d in self.detections],
        }


# Rec. 601 luma weights used for color -> gray normalization.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def to_grayscale(rgb: np.ndarray, index: int = 0, timestamp_ms: int = 0) -> Frame:
    """Collapse an (h, w, 3) uint8 RGB frame to a grayscale Frame.

    Per-pixel luma is round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255].
    Already-gray content (R == G == B) passes through unchanged.
    """
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidGeometry(f"expected an (h, w, 3) color array, got shape {arr.shape}")
    h, w = arr.shape[:2]
    if w < MIN_FRAME_SIDE or h < MIN_FRAME_SIDE:
        raise InvalidGeometry(
            f"frame must be at least {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}, got {w}x{h}"
        )
    luma = arr.astype(np.float64) @ _LUMA
    gray = np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)
    return Frame(width=w, height=h, pixels=gray, index=index, timestamp_ms=timestamp_ms)


def promote_to_rgb(gray: np.ndarray) -> np.ndarray:
    """Stack a 2-D gray array into a writable (h, w, 3) RGB array."""
    g = np.asarray(gray, dtype=np.uint8)
    return np.repeat(g[:, :, None], 3, axis=2).copy()
