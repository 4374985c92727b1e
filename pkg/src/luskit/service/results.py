"""Result manifest and zip export.

Both are pure functions of stored job data, so repeated calls are
byte-identical — the cacheability the front end relies on when it swaps
between summarized/segmented/tagged views without reprocessing.
"""

from __future__ import annotations

import json
import zipfile
from io import BytesIO
from typing import Callable

from ..render import VARIANTS, AnalysisBundle
from ..rng import hash_u64
from ..summarizer import SummaryResult, sample_keyframes
from .store import JobRecord, JobStore, sanitize_name

DEFAULT_KEYFRAME_COUNT = 8

# fixed zip metadata keeps archives reproducible
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def default_seed(key: str, video_id: int) -> int:
    """Stable per-video seed for the default keyframe sample."""
    return hash_u64(key, video_id)


def keyframe_entries(
    summary: SummaryResult,
    abnormal: set[int],
    media_url: Callable[[str], str],
    n: int,
    seed: int,
) -> list[dict]:
    picked = sample_keyframes(summary, n, seed)
    return [
        {
            "index": idx,
            "abnormal": idx in abnormal,
            "urls": {
                variant: media_url(AnalysisBundle.keyframe_artifact(idx, variant))
                for variant in VARIANTS
            },
        }
        for idx in picked
    ]


def video_manifest(
    key: str,
    video_id: int,
    sidecar: dict,
    media_url: Callable[[str], str],
) -> dict:
    summary = SummaryResult.from_json(sidecar["summary"])
    abnormal = set(sidecar["abnormal_indices"])
    return {
        "video_id": video_id,
        "source_name": sidecar["source_name"],
        "fps": sidecar["fps"],
        "keyframe_count": len(summary.keyframe_indices),
        "urls": {
            "summarized": media_url("summarized.avi"),
            "segmented": media_url("segmented.avi"),
            "tagged": media_url("tagged.avi"),
        },
        "annotations_url": media_url("annotations.json"),
        "keyframes": keyframe_entries(
            summary,
            abnormal,
            media_url,
            DEFAULT_KEYFRAME_COUNT,
            default_seed(key, video_id),
        ),
    }


def build_manifest(store: JobStore, record: JobRecord) -> dict:
    key = record.key
    videos = []
    for video in record.videos:
        vid = video.video_id
        sidecar = store.read_summary(key, vid)
        videos.append(
            video_manifest(
                key, vid, sidecar,
                lambda artifact, vid=vid: f"/api/media/{key}/{vid}/{artifact}",
            )
        )
    return {
        "key": key,
        "videos": videos,
        "download_url": f"/api/download/{key}",
    }


def zip_entry_dir(video_id: int, source_name: str) -> str:
    return f"video_{video_id}_{sanitize_name(source_name)}"


def exported_artifact_names(summary: SummaryResult, key: str, video_id: int) -> list[str]:
    """The per-video files a zip (and the offline CLI tree) carries: the
    three videos, annotations, and the default keyframe set's stills."""
    names = ["summarized.avi", "segmented.avi", "tagged.avi", "annotations.json"]
    picked = sample_keyframes(summary, DEFAULT_KEYFRAME_COUNT, default_seed(key, video_id))
    for idx in picked:
        names.extend(AnalysisBundle.keyframe_artifact(idx, v) for v in VARIANTS)
    return names


def collect_zip_entries(store: JobStore, record: JobRecord) -> dict[str, bytes]:
    """All zip entries as name -> bytes: per-video artifact dirs with the
    default keyframe stills, plus a top-level manifest.json."""
    entries: dict[str, bytes] = {}
    manifest = build_manifest(store, record)
    entries["manifest.json"] = (json.dumps(manifest, indent=2) + "\n").encode()
    for video in record.videos:
        vid = video.video_id
        sidecar = store.read_summary(record.key, vid)
        summary = SummaryResult.from_json(sidecar["summary"])
        vdir = zip_entry_dir(vid, video.source_name)
        for name in exported_artifact_names(summary, record.key, vid):
            path = store.artifact_path(record.key, vid, name)
            if path is None:
                raise FileNotFoundError(f"missing artifact {name} for video {vid}")
            entries[f"{vdir}/{name}"] = path.read_bytes()
    return entries


def build_zip(store: JobStore, record: JobRecord) -> bytes:
    """Reproducible archive: sorted entries, zeroed timestamps, fixed attrs."""
    entries = collect_zip_entries(store, record)
    buf = BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for name in sorted(entries):
            info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
            info.external_attr = 0o644 << 16
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, entries[name], compresslevel=6)
    return buf.getvalue()
