"""Walk the whole HTTP flow: upload -> process -> poll -> results -> zip.

Boots the service in-process (no network needed) and drives it the way
the web UI does, printing each response along the way.

Run:  python3 demos/demo_service.py
"""

import io
import tempfile
import time
import zipfile

from fastapi.testclient import TestClient

from luskit import videoio
from luskit.phantom import PhantomSpec, generate
from luskit.service import ServiceConfig, create_app

clips = []
for seed, extras in ((1, {"bline_cols": (40,)}), (2, {"shadow_cols": ((10, 20),)})):
    spec = PhantomSpec(width=64, height=64, pleura_row=16, noise_seed=seed,
                       n_frames=8, **extras)
    clips.append((f"clip_{seed}.y4m", videoio.encode_y4m(generate(spec)[0])))

config = ServiceConfig(data_root=tempfile.mkdtemp(prefix="luskit-demo-"), workers=2)
app = create_app(config)

with TestClient(app) as client:
    print("health:", client.get("/api/health").json())

    r = client.post("/api/upload", files=[
        ("videos", (name, data, "application/octet-stream")) for name, data in clips
    ])
    key = r.json()["key"]
    print(f"uploaded {r.json()['videos']} videos -> key {key}")

    print("process:", client.post(f"/api/process/{key}").json())
    while True:
        status = client.get(f"/api/status/{key}").json()
        print("  poll:", status)
        if status["state"] in ("complete", "failed"):
            break
        time.sleep(0.2)

    manifest = client.get(f"/api/results/{key}").json()
    for video in manifest["videos"]:
        print(f"video {video['video_id']} ({video['source_name']}): "
              f"{video['keyframe_count']} keyframes, "
              f"{sum(e['abnormal'] for e in video['keyframes'])} abnormal in default set")
        print("  segmented video:", video["urls"]["segmented"])

    # toggling views in the UI is a pure URL swap; fetch all three variants
    v0 = manifest["videos"][0]
    for variant, url in v0["urls"].items():
        size = len(client.get(url).content)
        print(f"  {variant}: {size} bytes")

    # the arrow button: a fresh seed resamples the keyframe grid
    for seed in (101, 102):
        picked = [e["index"] for e in
                  client.get(f"/api/keyframes/{key}/0?n=4&seed={seed}").json()]
        print(f"keyframes with seed {seed}: {picked}")

    blob = client.get(f"/api/download/{key}").content
    names = zipfile.ZipFile(io.BytesIO(blob)).namelist()
    print(f"download zip: {len(blob)} bytes, {len(names)} entries, "
          f"top level: {sorted({n.split('/')[0] for n in names})}")
