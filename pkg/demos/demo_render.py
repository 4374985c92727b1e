"""Render the visible artifacts: colored masks, labeled boxes, videos.

Produces the three per-keyframe variants the web UI toggles between
(plain summarized, segmentation overlay, object tagging) plus the
corresponding MJPEG-AVI videos.

Run:  python3 demos/demo_render.py
"""

from pathlib import Path

from luskit import videoio
from luskit.analyzer import analyze_frame
from luskit.phantom import PhantomSpec, generate
from luskit.render import OverlayStyle, build_bundle, render_segmentation, render_tagging
from luskit.summarizer import SummarizerParams, summarize

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

spec = PhantomSpec(
    width=160,
    height=128,
    pleura_row=24,
    aline_count=1,
    bline_cols=(120,),
    shadow_cols=((16, 28),),
    consolidation_rects=((60, 70, 30, 22),),
    noise_seed=42,
    n_frames=6,
)
seq, _ = generate(spec)
style = OverlayStyle()  # default palette: pleura green, b-line red, ...

frame = seq.frames[0]
ann = analyze_frame(frame)

segmented = render_segmentation(frame, ann, style)
tagged = render_tagging(frame, ann, style)
(out_dir / "frame_plain.png").write_bytes(videoio.encode_png(frame))
(out_dir / "frame_segmented.png").write_bytes(videoio.encode_png(segmented))
(out_dir / "frame_tagged.png").write_bytes(videoio.encode_png(tagged))
print("wrote frame_plain.png, frame_segmented.png, frame_tagged.png")

for det in ann.detections:
    print(f"  box {det.bbox} -> label {style.label_for(det.cls, det.confidence)!r}")

# full bundle: three videos + stills + annotations JSON, all deterministic
summary = summarize(seq, SummarizerParams(k_min=2))
anns = {i: analyze_frame(seq.frames[i]) for i in summary.keyframe_indices}
bundle = build_bundle(seq, summary, anns, style)
for name in ("summarized.avi", "segmented.avi", "tagged.avi", "annotations.json"):
    (out_dir / name).write_bytes(bundle.artifacts[name])
print(f"wrote bundle with {len(bundle.artifacts)} artifacts "
      f"({len(summary.keyframe_indices)} keyframes x 3 variants + videos + json)")
