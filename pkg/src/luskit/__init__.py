"""luskit: lung ultrasound video analysis toolkit.

Decodes ultrasound clips, compresses them to diagnostically relevant
keyframes, detects and segments the six standard artefact classes
(a-line, b-line, consolidation, pleura, rib, shadow), renders overlay
videos and images, and serves the whole pipeline behind a job-based
HTTP API. The rule-based reference algorithms are verifiable against
the bundled phantom generator; trained models can replace them through
the summarizer/analyzer plugin registries.
"""

from .analyzer import AnalyzerParams, analyze_frame, flag_frame
from .core import (
    ArtefactClass,
    Detection,
    Frame,
    FrameAnnotation,
    FrameSequence,
    LuskitError,
    SegMask,
    to_grayscale,
)
from .phantom import PhantomSpec, generate as generate_phantom
from .pipeline import PipelineConfig, process_video
from .render import AnalysisBundle, OverlayStyle, build_bundle, render_segmentation, render_tagging
from .summarizer import (
    FeatureVector,
    SummarizerParams,
    SummaryResult,
    extract_features,
    sample_keyframes,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisBundle",
    "AnalyzerParams",
    "ArtefactClass",
    "Detection",
    "FeatureVector",
    "Frame",
    "FrameAnnotation",
    "FrameSequence",
    "LuskitError",
    "OverlayStyle",
    "PhantomSpec",
    "PipelineConfig",
    "SegMask",
    "SummarizerParams",
    "SummaryResult",
    "analyze_frame",
    "build_bundle",
    "extract_features",
    "flag_frame",
    "generate_phantom",
    "process_video",
    "render_segmentation",
    "render_tagging",
    "sample_keyframes",
    "summarize",
    "to_grayscale",
    "__version__",
]
