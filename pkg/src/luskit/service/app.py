"""HTTP API: upload, key-scoped job lifecycle, results, media, zip export.

Keys are capability tokens — knowing one grants access to exactly that
job's artifacts. Completed artifacts are immutable, so every media and
manifest response is byte-stable and safe to cache client-side.
"""

from __future__ import annotations

import contextlib
import logging
import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from starlette.datastructures import UploadFile

from .. import __version__
from ..summarizer import SummaryResult
from .config import ServiceConfig
from .results import build_manifest, build_zip, default_seed, keyframe_entries
from .store import JobStore, UnknownKey
from .worker import WorkerPool

log = logging.getLogger("luskit.service")

_CONTENT_TYPES = {
    ".avi": "video/x-msvideo",
    ".png": "image/png",
    ".json": "application/json",
}

_UPLOAD_CHUNK = 1024 * 1024


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


def _not_found(detail: str) -> JSONResponse:
    return _error(404, "unknown_key", detail)


class _SpaStaticFiles(StaticFiles):
    """Static hosting with single-page-app fallback: unknown extensionless
    paths serve index.html so client-side routes deep-link correctly."""

    async def get_response(self, path: str, scope):
        from starlette.exceptions import HTTPException

        try:
            return await super().get_response(path, scope)
        except HTTPException as e:
            if e.status_code == 404 and "." not in path.rsplit("/", 1)[-1]:
                return await super().get_response("index.html", scope)
            raise


class _Sweeper(threading.Thread):
    def __init__(self, store: JobStore, ttl: float, interval: float):
        super().__init__(name="luskit-sweeper", daemon=True)
        self.store = store
        self.ttl = ttl
        self.interval = interval
        self._stop = threading.Event()

    def run(self):
        while not self._stop.wait(self.interval):
            try:
                removed = self.store.sweep_expired(self.ttl)
                if removed:
                    log.info("swept %d expired jobs", len(removed))
            except Exception:
                log.exception("retention sweep failed")

    def stop(self):
        self._stop.set()


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    store = JobStore(config.data_root)
    pool = WorkerPool(store, config.pipeline_config(), workers=config.workers)
    sweeper = _Sweeper(store, config.ttl_seconds, config.sweep_interval_seconds)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        pool.start()
        # jobs interrupted by a previous shutdown restart as queued
        for key in store.recover_incomplete():
            log.info("re-queueing interrupted job %s", key)
            pool.enqueue_job(key)
        sweeper.start()
        yield
        sweeper.stop()
        pool.stop()

    app = FastAPI(title="luskit", version=__version__, lifespan=lifespan)
    app.state.config = config
    app.state.store = store
    app.state.pool = pool

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/api/upload")
    async def upload(request: Request):
        form = await request.form()
        uploads = [v for v in form.getlist("videos") if isinstance(v, UploadFile)]
        if not uploads:
            return _error(400, "empty_upload", "no files in the 'videos' field")
        if len(uploads) > config.max_videos:
            return _error(
                400, "too_many_files",
                f"{len(uploads)} files exceed the limit of {config.max_videos}",
            )
        files: list[tuple[str, bytes]] = []
        for item in uploads:
            chunks: list[bytes] = []
            total = 0
            while True:
                chunk = await item.read(_UPLOAD_CHUNK)
                if not chunk:
                    break
                total += len(chunk)
                if total > config.max_upload_bytes:
                    return _error(
                        413, "file_too_large",
                        f"{item.filename or 'upload'} exceeds "
                        f"{config.max_upload_bytes} bytes",
                    )
                chunks.append(chunk)
            files.append((item.filename or "upload", b"".join(chunks)))
        key = store.create_job(files)
        return {"key": key, "videos": len(files)}

    @app.post("/api/process/{key}")
    def process(key: str):
        try:
            record = store.get(key)
        except UnknownKey as e:
            return _not_found(str(e))
        if record.state == "uploaded":
            pool.enqueue_job(key)
            return JSONResponse(status_code=202, content={"state": "queued"})
        # idempotent: an already-triggered job reports its state unchanged
        return {"state": record.state}

    @app.get("/api/status/{key}")
    def status(key: str):
        try:
            record = store.get(key)
        except UnknownKey as e:
            return _not_found(str(e))
        body = {"state": record.state, "progress": record.progress}
        if record.error is not None:
            body["error"] = record.error
        return body

    def _completed_record(key: str):
        record = store.get(key)
        if record.state != "complete":
            detail = f"job state is {record.state}"
            if record.error:
                detail += f": {record.error}"
            return None, _error(409, "not_ready", detail)
        return record, None

    @app.get("/api/results/{key}")
    def results(key: str):
        try:
            record, err = _completed_record(key)
        except UnknownKey as e:
            return _not_found(str(e))
        if err is not None:
            return err
        return build_manifest(store, record)

    @app.get("/api/keyframes/{key}/{video_id}")
    def keyframes(key: str, video_id: int, n: int = 8, seed: int | None = None):
        try:
            record, err = _completed_record(key)
        except UnknownKey as e:
            return _not_found(str(e))
        if err is not None:
            return err
        if not any(v.video_id == video_id for v in record.videos):
            return _error(404, "unknown_video", f"job has no video {video_id}")
        if n < 1:
            return _error(400, "bad_request", "n must be >= 1")
        sidecar = store.read_summary(key, video_id)
        summary = SummaryResult.from_json(sidecar["summary"])
        if seed is None:
            seed = default_seed(key, video_id)
        return keyframe_entries(
            summary,
            set(sidecar["abnormal_indices"]),
            lambda artifact: f"/api/media/{key}/{video_id}/{artifact}",
            n,
            seed,
        )

    @app.get("/api/media/{key}/{video_id}/{artifact:path}")
    def media(key: str, video_id: int, artifact: str):
        try:
            store.get(key)
        except UnknownKey as e:
            return _not_found(str(e))
        path = store.artifact_path(key, video_id, artifact)
        if path is None:
            return _error(404, "unknown_artifact", f"no artifact {artifact!r}")
        content_type = _CONTENT_TYPES.get(path.suffix, "application/octet-stream")
        return Response(content=path.read_bytes(), media_type=content_type)

    @app.get("/api/download/{key}")
    def download(key: str):
        try:
            record, err = _completed_record(key)
        except UnknownKey as e:
            return _not_found(str(e))
        if err is not None:
            return err
        data = build_zip(store, record)
        return Response(
            content=data,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="results_{key}.zip"'},
        )

    if config.static_dir:
        app.mount("/", _SpaStaticFiles(directory=config.static_dir, html=True), name="ui")

    return app
