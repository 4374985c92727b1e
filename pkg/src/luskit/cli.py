"""Command line entry points: serve, analyze, phantom.

analyze runs the exact pipeline the service workers run and writes the
same directory layout the zip download contains, so offline and web
results can be diffed file for file.

Exit codes: 0 all good, 1 partial or total failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from . import videoio
from .phantom import PhantomSpec, SpecOutOfBounds, generate
from .pipeline import process_video
from .service.config import ServiceConfig, load_config
from .service.results import video_manifest, exported_artifact_names, zip_entry_dir


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="luskit", description="lung ultrasound video analysis toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API and static UI")
    serve.add_argument("--config", help="JSON config file")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--data-root")
    serve.add_argument("--static-dir")

    analyze = sub.add_parser("analyze", help="process videos offline")
    analyze.add_argument("inputs", nargs="+", help="video files")
    analyze.add_argument("--out", required=True, help="output directory")
    analyze.add_argument("--params", help="JSON file of pipeline parameters "
                                          "(same schema as the service config)")
    analyze.add_argument("--json", action="store_true", dest="as_json",
                         help="machine-readable summary on stdout")

    phantom = sub.add_parser("phantom", help="generate a synthetic test clip")
    phantom.add_argument("spec", help="phantom spec JSON file")
    phantom.add_argument("--out", required=True, help="output Y4M path")
    phantom.add_argument("--ground-truth",
                         help="ground truth JSON path (default: <out>.gt.json)")
    return parser


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    try:
        config = load_config(args.config, overrides={
            "host": args.host,
            "port": args.port,
            "data_root": args.data_root,
            "static_dir": args.static_dir,
        })
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: bad config: {e}", file=sys.stderr)
        return 1

    data_root = Path(config.data_root)
    if not data_root.exists() and not data_root.parent.exists():
        print(f"error: data root parent {data_root.parent} does not exist",
              file=sys.stderr)
        return 1

    # fail fast with a useful message instead of a uvicorn traceback
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.bind((config.host, config.port))
        probe.close()
    except OSError as e:
        print(f"error: cannot bind {config.host}:{config.port}: {e}", file=sys.stderr)
        return 1

    app = create_app(config)
    print(f"luskit serving on http://{config.host}:{config.port} "
          f"(data root {config.data_root}, workers {config.workers}, "
          f"summarizer {config.summarizer!r}, analyzer {config.analyzer!r})")
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_analyze(args) -> int:
    try:
        config = load_config(args.params) if args.params else ServiceConfig()
        pipeline_cfg = config.pipeline_config()
    except (OSError, ValueError, json.JSONDecodeError) as e:
        print(f"error: bad params: {e}", file=sys.stderr)
        return 1

    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)

    report = {"videos": [], "failed": []}
    manifest_videos = []
    for vid, input_path in enumerate(Path(p) for p in args.inputs):
        try:
            data = input_path.read_bytes()
            result = process_video(data, input_path.name, pipeline_cfg)
        except Exception as e:
            print(f"video_{vid} {input_path.name}: FAILED: {e}", file=sys.stderr)
            report["failed"].append(
                {"video_id": vid, "source_name": input_path.name, "error": str(e)}
            )
            continue

        bundle, summary = result.bundle, result.summary
        vdir_name = zip_entry_dir(vid, input_path.name)
        vdir = out_root / vdir_name
        (vdir / "keyframes").mkdir(parents=True, exist_ok=True)
        # offline trees hash the empty key so reruns are reproducible
        for name in exported_artifact_names(summary, "", vid):
            (vdir / name).write_bytes(bundle.artifacts[name])

        sidecar = {
            "source_name": input_path.name,
            "fps": bundle.fps,
            "summary": summary.to_json(),
            "abnormal_indices": sorted(bundle.abnormal_indices),
        }
        manifest_videos.append(
            video_manifest("", vid, sidecar, lambda a, d=vdir_name: f"{d}/{a}")
        )
        n_key = len(summary.keyframe_indices)
        n_abn = len(bundle.abnormal_indices)
        print(f"video_{vid} {input_path.name}: {n_key} keyframes, {n_abn} abnormal")
        report["videos"].append({
            "video_id": vid,
            "source_name": input_path.name,
            "keyframes": n_key,
            "abnormal": n_abn,
            "out_dir": str(vdir),
        })

    manifest = {"key": "", "videos": manifest_videos, "download_url": None}
    (out_root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    if args.as_json:
        print(json.dumps(report, indent=2))
    return 1 if report["failed"] else 0


def cmd_phantom(args) -> int:
    try:
        spec_obj = json.loads(Path(args.spec).read_text())
        spec = PhantomSpec.from_json(spec_obj)
    except (OSError, json.JSONDecodeError, TypeError, KeyError) as e:
        print(f"error: bad phantom spec: {e}", file=sys.stderr)
        return 1
    except SpecOutOfBounds as e:
        print(f"error: invalid phantom spec: {e}", file=sys.stderr)
        return 1

    seq, annotations = generate(spec)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(videoio.encode_y4m(seq))

    gt_path = Path(args.ground_truth) if args.ground_truth else out_path.with_suffix(
        out_path.suffix + ".gt.json"
    )
    gt = {
        "width": spec.width,
        "height": spec.height,
        "fps": seq.fps,
        "n_frames": spec.n_frames,
        "frames": [a.to_json() for a in annotations],
    }
    gt_path.write_text(json.dumps(gt, indent=2) + "\n")
    print(f"wrote {out_path} ({spec.n_frames} frames) and {gt_path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "analyze":
        return cmd_analyze(args)
    if args.command == "phantom":
        return cmd_phantom(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
