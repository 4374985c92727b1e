"""Background processing: a bounded thread pool over a FIFO video queue.

Jobs enqueue one task per video. The first task to run moves the job to
processing; the last finished video completes it. Any per-video failure
fails the whole job with an error naming the video, and remaining tasks
for that job drain as no-ops. Workers never share mutable state; all
coordination goes through the store's per-key locks.
"""

from __future__ import annotations

import logging
import queue
import threading

from ..pipeline import PipelineConfig, process_video
from .store import JobStore, TERMINAL_STATES

log = logging.getLogger("luskit.worker")

_STOP = object()


class WorkerPool:
    def __init__(self, store: JobStore, pipeline_cfg: PipelineConfig, workers: int = 2):
        self.store = store
        self.pipeline_cfg = pipeline_cfg
        self.tasks: queue.Queue = queue.Queue()
        self.threads = [
            threading.Thread(target=self._run, name=f"luskit-worker-{i}", daemon=True)
            for i in range(max(1, workers))
        ]
        self._started = False

    def start(self) -> None:
        if not self._started:
            self._started = True
            for t in self.threads:
                t.start()

    def stop(self) -> None:
        for _ in self.threads:
            self.tasks.put(_STOP)
        for t in self.threads:
            t.join(timeout=10)

    def enqueue_job(self, key: str) -> None:
        """Queue every video of an uploaded (or recovered) job."""
        record = self.store.transition(key, "queued")
        for video in record.videos:
            self.tasks.put((key, video.video_id))

    def _run(self) -> None:
        while True:
            task = self.tasks.get()
            if task is _STOP:
                return
            key, video_id = task
            try:
                self._process(key, video_id)
            except Exception:
                log.exception("worker crashed on job %s video %s", key, video_id)
                self.store.try_fail(key, f"internal error on video {video_id}")
            finally:
                self.tasks.task_done()

    def _process(self, key: str, video_id: int) -> None:
        record = self.store.get(key)
        if record.state in TERMINAL_STATES:
            return
        if record.state == "queued":
            record = self.store.transition(key, "processing")
        if record.state != "processing":
            return
        video = record.videos[video_id]
        try:
            data = self.store.upload_bytes(key, video_id)
            result = process_video(data, video.source_name, self.pipeline_cfg)
            self.store.write_bundle(key, video_id, result.bundle, result.summary)
        except Exception as e:
            self.store.try_fail(
                key, f"video {video_id} ({video.source_name}): {e}"
            )
            return
        self.store.mark_video_done(key, video_id)
