"""Compress a clip to its diagnostically distinct keyframes.

A clip with three recurring "scenes" should summarize to roughly three
keyframes: farthest-point selection keeps adding frames only while they
bring novelty above the coverage threshold tau. The selection trace
shows what each pick contributed.

Run:  python3 demos/demo_summarize.py
"""

import math
from pathlib import Path

import numpy as np

from luskit import videoio
from luskit.core import FrameSequence
from luskit.phantom import PhantomSpec, generate
from luskit.summarizer import SummarizerParams, sample_keyframes, summarize

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# three distinct scenes, interleaved twice: normal lung, B-line, shadow
scene_specs = [
    PhantomSpec(width=96, height=96, pleura_row=18, aline_count=1, noise_seed=1),
    PhantomSpec(width=96, height=96, pleura_row=18, bline_cols=(70,), noise_seed=2),
    PhantomSpec(width=96, height=96, pleura_row=18, shadow_cols=((20, 30),), noise_seed=3),
]
scene_frames = [generate(s)[0].frames[0].pixels for s in scene_specs]
arrays = [scene_frames[i % 3] for i in range(6)]
seq = FrameSequence.from_arrays(arrays, fps=20, source_name="three_scenes")

params = SummarizerParams(tau=0.05, k_min=1)
summary = summarize(seq, params)

print(f"{len(seq)} frames -> keyframes {list(summary.keyframe_indices)}")
print(f"coverage radius: {summary.coverage_radius:.4f} (tau={params.tau})")
print("selection trace (order, novelty when picked):")
for index, novelty in summary.selection_trace:
    shown = "seed" if math.isinf(novelty) else f"{novelty:.4f}"
    print(f"  frame {index}: {shown}")

strip = np.concatenate([seq.frames[i].pixels for i in summary.keyframe_indices], axis=1)
(out_dir / "keyframe_strip.png").write_bytes(videoio.encode_png(strip))
print("wrote", out_dir / "keyframe_strip.png")

# the random-frames control in the UI is a seeded sample over this pool
for seed in (1, 2):
    print(f"sample_keyframes(n=2, seed={seed}):",
          sample_keyframes(summary, 2, seed))
