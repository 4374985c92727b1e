"""Detect and segment artefacts, scored against phantom ground truth.

Runs the rule-based analyzer over a mixed phantom and reports, per
class, what was found versus what the generator placed.

Run:  python3 demos/demo_detect.py
"""

from luskit.analyzer import AnalyzerParams, analyze_frame
from luskit.core import ArtefactClass
from luskit.phantom import PhantomSpec, generate

spec = PhantomSpec(
    width=128,
    height=128,
    pleura_row=22,
    aline_count=2,
    bline_cols=(100,),
    shadow_cols=((14, 24),),
    consolidation_rects=((50, 70, 26, 18),),
    noise_seed=7,
    n_frames=1,
)
seq, ground_truth = generate(spec)
frame, gt = seq.frames[0], ground_truth[0]

params = AnalyzerParams()
ann = analyze_frame(frame, params)

print(f"analyzed one {frame.width}x{frame.height} frame")
print(f"flagged abnormal: {ann.abnormal} (ground truth: {gt.abnormal})\n")

print(f"{'class':14s}  {'found':>5s}  {'truth':>5s}  detections")
for cls in ArtefactClass:
    found = [d for d in ann.detections if d.cls is cls]
    truth = [d for d in gt.detections if d.cls is cls]
    boxes = "; ".join(f"{d.bbox} conf={d.confidence:.2f}" for d in found) or "-"
    print(f"{cls.value:14s}  {len(found):5d}  {len(truth):5d}  {boxes}")

print("\nsegmentation masks present:",
      ", ".join(m.cls.value for m in ann.masks) or "none")

# pleura localization error against the generator's placement
pleura = next(d for d in ann.detections if d.cls is ArtefactClass.PLEURA)
detected_row = pleura.bbox[1] + 2
print(f"pleura row: detected {detected_row}, true {spec.pleura_row}, "
      f"error {abs(detected_row - spec.pleura_row)} px")
