"""Filesystem job store: one directory per key, atomic state records.

Layout under <data_root>/jobs/<key>/:

    job.json                     state machine record, written atomically
    uploads/<id>.bin             raw uploaded bytes
    summaries/video_<id>.json    summary + abnormal flags for resampling
    artifacts/video_<id>/...     the immutable bundle files

State machine: uploaded -> queued -> processing -> complete | failed.
Terminal states are never left. Transitions are serialized per key; a
job directory is only visible to readers once fully created.
"""

from __future__ import annotations

import json
import os
import re
import secrets
import shutil
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from ..core import LuskitError
from ..render import AnalysisBundle
from ..summarizer import SummaryResult

STATES = ("uploaded", "queued", "processing", "complete", "failed")
TERMINAL_STATES = ("complete", "failed")

_TRANSITIONS = {
    "uploaded": {"queued"},
    "queued": {"processing", "failed"},
    "processing": {"complete", "failed"},
    "complete": set(),
    "failed": set(),
}

_KEY_RE = re.compile(r"^[A-Za-z0-9_-]{22}$")


class UnknownKey(LuskitError):
    """No job exists under this key."""


class IllegalTransition(LuskitError):
    """The requested state change violates the job state machine."""


def new_job_key() -> str:
    """128 random bits as 22 URL-safe base64 characters, no padding."""
    return secrets.token_urlsafe(16)


def is_valid_key(key: str) -> bool:
    return bool(_KEY_RE.match(key))


def sanitize_name(name: str) -> str:
    cleaned = re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("._") or "video"
    return cleaned[:80]


@dataclass(frozen=True)
class VideoRef:
    video_id: int
    source_name: str
    size: int

    def to_json(self) -> dict:
        return {"video_id": self.video_id, "source_name": self.source_name, "size": self.size}


@dataclass(frozen=True)
class JobRecord:
    key: str
    state: str
    videos: tuple[VideoRef, ...]
    videos_done: tuple[int, ...]
    error: str | None
    created_at: float
    completed_at: float | None

    @property
    def progress(self) -> float:
        if self.state == "complete":
            return 1.0
        if self.state in ("uploaded", "queued"):
            return 0.0
        if not self.videos:
            return 0.0
        return len(self.videos_done) / len(self.videos)

    def to_json(self) -> dict:
        return {
            "key": self.key,
            "state": self.state,
            "videos": [v.to_json() for v in self.videos],
            "videos_done": sorted(self.videos_done),
            "error": self.error,
            "created_at": self.created_at,
            "completed_at": self.completed_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "JobRecord":
        return cls(
            key=obj["key"],
            state=obj["state"],
            videos=tuple(VideoRef(**v) for v in obj["videos"]),
            videos_done=tuple(obj.get("videos_done", ())),
            error=obj.get("error"),
            created_at=obj["created_at"],
            completed_at=obj.get("completed_at"),
        )


class JobStore:
    """Durable job state under data_root; safe for concurrent threads."""

    def __init__(self, data_root: str | Path):
        self.root = Path(data_root)
        self.jobs_dir = self.root / "jobs"
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(key, threading.Lock())

    def _job_dir(self, key: str) -> Path:
        return self.jobs_dir / key

    def _record_path(self, key: str) -> Path:
        return self._job_dir(key) / "job.json"

    def _write_record(self, record: JobRecord) -> None:
        path = self._record_path(record.key)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record.to_json(), indent=2) + "\n")
        os.replace(tmp, path)

    # -- creation ----------------------------------------------------------

    def create_job(self, files: list[tuple[str, bytes]]) -> str:
        """Store uploads durably under a fresh unique key."""
        while True:
            key = new_job_key()
            job_dir = self._job_dir(key)
            try:
                # mkdir is the atomic collision check against existing keys
                job_dir.mkdir(parents=False, exist_ok=False)
                break
            except FileExistsError:
                continue
        uploads = job_dir / "uploads"
        uploads.mkdir()
        (job_dir / "summaries").mkdir()
        (job_dir / "artifacts").mkdir()
        videos = []
        for vid, (name, data) in enumerate(files):
            (uploads / f"{vid:03d}.bin").write_bytes(data)
            videos.append(VideoRef(video_id=vid, source_name=name, size=len(data)))
        record = JobRecord(
            key=key,
            state="uploaded",
            videos=tuple(videos),
            videos_done=(),
            error=None,
            created_at=time.time(),
            completed_at=None,
        )
        self._write_record(record)
        return key

    # -- reads -------------------------------------------------------------

    def get(self, key: str) -> JobRecord:
        if not is_valid_key(key):
            raise UnknownKey(f"malformed key {key!r}")
        path = self._record_path(key)
        if not path.exists():
            raise UnknownKey(f"no job under key {key!r}")
        return JobRecord.from_json(json.loads(path.read_text()))

    def list_keys(self) -> list[str]:
        return sorted(
            p.name for p in self.jobs_dir.iterdir()
            if p.is_dir() and (p / "job.json").exists()
        )

    def upload_bytes(self, key: str, video_id: int) -> bytes:
        path = self._job_dir(key) / "uploads" / f"{video_id:03d}.bin"
        if not path.exists():
            raise UnknownKey(f"job {key!r} has no video {video_id}")
        return path.read_bytes()

    # -- state transitions ---------------------------------------------------

    def transition(self, key: str, to_state: str, error: str | None = None) -> JobRecord:
        """Move the job to to_state if the state machine allows it."""
        with self._lock(key):
            record = self.get(key)
            if to_state == record.state:
                return record
            if to_state not in _TRANSITIONS[record.state]:
                raise IllegalTransition(
                    f"job {key}: cannot move {record.state} -> {to_state}"
                )
            updated = JobRecord(
                key=record.key,
                state=to_state,
                videos=record.videos,
                videos_done=record.videos_done,
                error=error if error is not None else record.error,
                created_at=record.created_at,
                completed_at=time.time() if to_state in TERMINAL_STATES else None,
            )
            self._write_record(updated)
            return updated

    def try_fail(self, key: str, error: str) -> bool:
        """Fail the job unless it already reached a terminal state."""
        with self._lock(key):
            record = self.get(key)
            if record.state in TERMINAL_STATES:
                return False
            updated = JobRecord(
                key=record.key,
                state="failed",
                videos=record.videos,
                videos_done=record.videos_done,
                error=error,
                created_at=record.created_at,
                completed_at=time.time(),
            )
            self._write_record(updated)
            return True

    def mark_video_done(self, key: str, video_id: int) -> JobRecord:
        """Record one finished video; completes the job on the last one."""
        with self._lock(key):
            record = self.get(key)
            if record.state != "processing":
                return record
            done = tuple(sorted(set(record.videos_done) | {video_id}))
            complete = len(done) == len(record.videos)
            updated = JobRecord(
                key=record.key,
                state="complete" if complete else "processing",
                videos=record.videos,
                videos_done=done,
                error=record.error,
                created_at=record.created_at,
                completed_at=time.time() if complete else None,
            )
            self._write_record(updated)
            return updated

    # -- artifacts -----------------------------------------------------------

    def video_dir(self, key: str, video_id: int) -> Path:
        return self._job_dir(key) / "artifacts" / f"video_{video_id}"

    def write_bundle(self, key: str, video_id: int, bundle: AnalysisBundle,
                     summary: SummaryResult) -> None:
        vdir = self.video_dir(key, video_id)
        if vdir.exists():
            shutil.rmtree(vdir)
        (vdir / "keyframes").mkdir(parents=True)
        for name, data in bundle.artifacts.items():
            (vdir / name).write_bytes(data)
        sidecar = {
            "video_id": video_id,
            "source_name": bundle.video_name,
            "fps": bundle.fps,
            "summary": summary.to_json(),
            "abnormal_indices": sorted(bundle.abnormal_indices),
        }
        spath = self._job_dir(key) / "summaries" / f"video_{video_id}.json"
        tmp = spath.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(sidecar, indent=2) + "\n")
        os.replace(tmp, spath)

    def read_summary(self, key: str, video_id: int) -> dict:
        path = self._job_dir(key) / "summaries" / f"video_{video_id}.json"
        if not path.exists():
            raise UnknownKey(f"job {key!r} has no summary for video {video_id}")
        return json.loads(path.read_text())

    def artifact_path(self, key: str, video_id: int, artifact: str) -> Path | None:
        """Resolve an artifact name inside the job's own directory, or None.

        Containment is enforced by path resolution, so traversal tricks and
        cross-key names cannot escape the video directory.
        """
        base = self.video_dir(key, video_id).resolve()
        try:
            candidate = (base / artifact).resolve()
        except OSError:
            return None
        if base not in candidate.parents:
            return None
        if not candidate.is_file():
            return None
        return candidate

    # -- recovery and retention ----------------------------------------------

    def recover_incomplete(self) -> list[str]:
        """Reset jobs interrupted mid-flight back to queued; returns their keys."""
        requeued = []
        for key in self.list_keys():
            with self._lock(key):
                record = self.get(key)
                if record.state not in ("queued", "processing"):
                    continue
                updated = JobRecord(
                    key=record.key,
                    state="queued",
                    videos=record.videos,
                    videos_done=(),
                    error=None,
                    created_at=record.created_at,
                    completed_at=None,
                )
                self._write_record(updated)
                requeued.append(key)
        return requeued

    def sweep_expired(self, ttl_seconds: float, now: float | None = None) -> list[str]:
        """Delete job directories older than the retention window."""
        now = time.time() if now is None else now
        removed = []
        for key in self.list_keys():
            with self._lock(key):
                try:
                    record = self.get(key)
                except (UnknownKey, json.JSONDecodeError):
                    continue
                if now - record.created_at > ttl_seconds:
                    shutil.rmtree(self._job_dir(key), ignore_errors=True)
                    removed.append(key)
        return removed
