import numpy as np
import pytest

from luskit import videoio
from luskit.analyzer import register_analyzer, _ANALYZERS
from luskit.core import ArtefactClass, Detection, FrameAnnotation
from luskit.phantom import PhantomSpec, generate
from luskit.pipeline import PipelineConfig, PluginContractViolation, process_video
from luskit.summarizer import register_summarizer, _SUMMARIZERS


def _clip_bytes(**kwargs):
    spec = PhantomSpec(**kwargs)
    seq, _ = generate(spec)
    return videoio.encode_y4m(seq)


def test_end_to_end_reference_pipeline():
    data = _clip_bytes(width=64, height=64, pleura_row=16, bline_cols=(40,),
                       noise_seed=9, n_frames=8)
    result = process_video(data, "clip.y4m", PipelineConfig())
    assert result.bundle.video_name == "clip.y4m"
    assert result.summary.keyframe_indices
    assert result.bundle.abnormal_indices  # the B-line flags keyframes
    assert "summarized.avi" in result.bundle.artifacts


def test_pipeline_is_deterministic():
    data = _clip_bytes(width=64, height=64, pleura_row=16, shadow_cols=((10, 18),),
                       noise_seed=4, n_frames=6)
    a = process_video(data, "clip.y4m")
    b = process_video(data, "clip.y4m")
    assert sorted(a.bundle.artifacts) == sorted(b.bundle.artifacts)
    for name in a.bundle.artifacts:
        assert a.bundle.artifacts[name] == b.bundle.artifacts[name]


def test_rejects_analyzer_with_out_of_bounds_boxes():
    def rogue(frame, params=None):
        det = Detection(cls=ArtefactClass.RIB, bbox=(frame.width - 2, 0, 10, 5),
                        confidence=0.9)
        return FrameAnnotation(frame_index=frame.index, detections=(det,))

    register_analyzer("rogue", rogue)
    try:
        data = _clip_bytes(width=64, height=64, pleura_row=16, noise_seed=1, n_frames=2)
        with pytest.raises(PluginContractViolation):
            process_video(data, "clip.y4m", PipelineConfig(analyzer="rogue"))
    finally:
        _ANALYZERS.pop("rogue", None)


def test_rejects_summarizer_with_bad_indices():
    def rogue(seq, params=None):
        from luskit.summarizer import ResolvedParams, SummaryResult

        return SummaryResult(
            keyframe_indices=(len(seq.frames) + 5,),
            novelty=(1.0,),
            coverage_radius=0.0,
            params_used=ResolvedParams(tau=0.1, k_max=1, k_min=1),
            selection_trace=((len(seq.frames) + 5, 1.0),),
        )

    register_summarizer("rogue", rogue)
    try:
        data = _clip_bytes(width=64, height=64, pleura_row=16, noise_seed=1, n_frames=2)
        with pytest.raises(PluginContractViolation):
            process_video(data, "clip.y4m", PipelineConfig(summarizer="rogue"))
    finally:
        _SUMMARIZERS.pop("rogue", None)


def test_corrupt_input_raises_decode_error():
    with pytest.raises(videoio.UnsupportedFormat):
        process_video(b"not a video at all", "clip.bin")
