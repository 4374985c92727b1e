"""The decode -> summarize -> analyze -> bundle path.

Both the HTTP worker pool and the offline CLI run videos through this
one function, which is what guarantees web and offline results agree
byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import videoio
from .analyzer import AnalyzerParams, get_analyzer
from .core import FrameAnnotation, LuskitError
from .render import AnalysisBundle, OverlayStyle, build_bundle
from .summarizer import SummarizerParams, SummaryResult, get_summarizer, validate_summary
from .videoio import DecoderConfig


class PluginContractViolation(LuskitError):
    """A summarizer or analyzer plugin returned an invalid result."""


@dataclass(frozen=True)
class PipelineConfig:
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    summarizer: str = "reference"
    analyzer: str = "reference"
    summarizer_params: SummarizerParams = field(default_factory=SummarizerParams)
    analyzer_params: AnalyzerParams = field(default_factory=AnalyzerParams)
    style: OverlayStyle = field(default_factory=OverlayStyle)


@dataclass(frozen=True)
class ProcessedVideo:
    bundle: AnalysisBundle
    summary: SummaryResult


def process_video(data: bytes, source_name: str, cfg: PipelineConfig | None = None) -> ProcessedVideo:
    """Run one uploaded video through the full analysis pipeline.

    Plugin outputs are validated at this boundary: a summary or
    annotation that violates its type contract fails the video rather
    than corrupting artifacts downstream.
    """
    cfg = cfg or PipelineConfig()
    seq = videoio.decode(data, source_name, cfg.decoder)

    summarize_fn = get_summarizer(cfg.summarizer)
    summary = summarize_fn(seq, cfg.summarizer_params)
    try:
        validate_summary(summary, len(seq))
    except (TypeError, ValueError) as e:
        raise PluginContractViolation(f"summarizer {cfg.summarizer!r}: {e}") from e

    analyze_fn = get_analyzer(cfg.analyzer)
    anns: dict[int, FrameAnnotation] = {}
    for idx in summary.keyframe_indices:
        ann = analyze_fn(seq.frames[idx], cfg.analyzer_params)
        if not isinstance(ann, FrameAnnotation):
            raise PluginContractViolation(
                f"analyzer {cfg.analyzer!r} returned {type(ann).__name__}"
            )
        if ann.frame_index != idx:
            ann = FrameAnnotation(
                frame_index=idx,
                detections=ann.detections,
                masks=ann.masks,
                abnormal=ann.abnormal,
            )
        try:
            ann.validate_geometry(seq.width, seq.height)
        except LuskitError as e:
            raise PluginContractViolation(f"analyzer {cfg.analyzer!r}: {e}") from e
        anns[idx] = ann

    bundle = build_bundle(seq, summary, anns, cfg.style)
    return ProcessedVideo(bundle=bundle, summary=summary)
