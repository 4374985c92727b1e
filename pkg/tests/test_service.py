import io
import json
import time
import zipfile
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from luskit import videoio
from luskit.phantom import PhantomSpec, generate
from luskit.service.app import create_app
from luskit.service.config import ServiceConfig, load_config
from luskit.service.store import (
    IllegalTransition,
    JobStore,
    UnknownKey,
    is_valid_key,
    new_job_key,
    sanitize_name,
)


def _clip(seed=1, n_frames=8, **kwargs):
    spec = PhantomSpec(width=64, height=64, pleura_row=16, noise_seed=seed,
                       n_frames=n_frames, **kwargs)
    return videoio.encode_y4m(generate(spec)[0])


def _upload(client, files):
    return client.post(
        "/api/upload",
        files=[("videos", (name, data, "application/octet-stream")) for name, data in files],
    )


def _wait_terminal(client, key, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        st = client.get(f"/api/status/{key}").json()
        if st["state"] in ("complete", "failed"):
            return st
        time.sleep(0.05)
    raise AssertionError(f"job {key} did not finish: {st}")


@pytest.fixture()
def client(tmp_path):
    app = create_app(ServiceConfig(data_root=str(tmp_path / "data"), workers=2))
    with TestClient(app) as c:
        yield c


def _complete_job(client, files=None):
    files = files or [("a.y4m", _clip(seed=3, bline_cols=(40,)))]
    key = _upload(client, files).json()["key"]
    client.post(f"/api/process/{key}")
    st = _wait_terminal(client, key)
    assert st["state"] == "complete", st
    return key


class TestKeys:
    def test_key_shape(self):
        key = new_job_key()
        assert len(key) == 22
        assert is_valid_key(key)

    def test_no_duplicates_in_ten_thousand(self):
        keys = {new_job_key() for _ in range(10_000)}
        assert len(keys) == 10_000

    def test_sanitize_name(self):
        assert sanitize_name("clip one?.y4m") == "clip_one_.y4m"
        assert sanitize_name("../../evil") == "evil"
        assert sanitize_name("") == "video"


class TestStore:
    def test_create_and_read(self, tmp_path):
        store = JobStore(tmp_path)
        key = store.create_job([("a.y4m", b"abc"), ("b.y4m", b"defg")])
        record = store.get(key)
        assert record.state == "uploaded"
        assert [v.source_name for v in record.videos] == ["a.y4m", "b.y4m"]
        assert store.upload_bytes(key, 1) == b"defg"

    def test_unknown_key(self, tmp_path):
        store = JobStore(tmp_path)
        with pytest.raises(UnknownKey):
            store.get("A" * 22)
        with pytest.raises(UnknownKey):
            store.get("not-a-key")

    def test_legal_transition_chain(self, tmp_path):
        store = JobStore(tmp_path)
        key = store.create_job([("a", b"x")])
        for state in ("queued", "processing", "complete"):
            assert store.transition(key, state).state == state

    def test_illegal_transitions_rejected(self, tmp_path):
        store = JobStore(tmp_path)
        key = store.create_job([("a", b"x")])
        with pytest.raises(IllegalTransition):
            store.transition(key, "processing")  # must pass through queued
        store.transition(key, "queued")
        store.transition(key, "processing")
        store.transition(key, "complete")
        with pytest.raises(IllegalTransition):
            store.transition(key, "queued")
        assert store.try_fail(key, "nope") is False
        assert store.get(key).state == "complete"

    def test_mark_video_done_completes_on_last(self, tmp_path):
        store = JobStore(tmp_path)
        key = store.create_job([("a", b"x"), ("b", b"y")])
        store.transition(key, "queued")
        store.transition(key, "processing")
        assert store.mark_video_done(key, 0).state == "processing"
        assert store.get(key).progress == 0.5
        assert store.mark_video_done(key, 1).state == "complete"

    def test_recover_incomplete_requeues(self, tmp_path):
        store = JobStore(tmp_path)
        key = store.create_job([("a", b"x")])
        store.transition(key, "queued")
        store.transition(key, "processing")
        fresh = JobStore(tmp_path)
        assert fresh.recover_incomplete() == [key]
        assert fresh.get(key).state == "queued"
        assert fresh.get(key).videos_done == ()

    def test_sweep_expired(self, tmp_path):
        store = JobStore(tmp_path)
        key = store.create_job([("a", b"x")])
        assert store.sweep_expired(ttl_seconds=3600) == []
        assert store.sweep_expired(ttl_seconds=0.0, now=time.time() + 10) == [key]
        with pytest.raises(UnknownKey):
            store.get(key)


class TestUpload:
    def test_two_files(self, client):
        r = _upload(client, [("a.y4m", _clip(1)), ("b.y4m", _clip(2))])
        assert r.status_code == 200
        body = r.json()
        assert len(body["key"]) == 22
        assert body["videos"] == 2
        st = client.get(f"/api/status/{body['key']}").json()
        assert st == {"state": "uploaded", "progress": 0.0}

    def test_empty_upload(self, client):
        r = client.post("/api/upload", data={})
        assert r.status_code == 400
        assert r.json()["error"] == "empty_upload"

    def test_too_many_files(self, tmp_path):
        app = create_app(ServiceConfig(data_root=str(tmp_path / "d"), max_videos=2))
        with TestClient(app) as client:
            r = _upload(client, [(f"{i}.y4m", b"x") for i in range(3)])
            assert r.status_code == 400
            assert r.json()["error"] == "too_many_files"

    def test_file_too_large(self, tmp_path):
        app = create_app(ServiceConfig(data_root=str(tmp_path / "d"), max_upload_bytes=100))
        with TestClient(app) as client:
            r = _upload(client, [("big.y4m", b"z" * 200)])
            assert r.status_code == 413
            assert r.json()["error"] == "file_too_large"


class TestProcessAndStatus:
    def test_full_lifecycle_states(self, client):
        key = _upload(client, [("a.y4m", _clip(1))]).json()["key"]
        r = client.post(f"/api/process/{key}")
        assert r.status_code == 202
        assert r.json()["state"] == "queued"
        st = _wait_terminal(client, key)
        assert st == {"state": "complete", "progress": 1.0}

    def test_process_is_idempotent(self, client):
        key = _complete_job(client)
        zip_before = client.get(f"/api/download/{key}").content
        r = client.post(f"/api/process/{key}")
        assert r.status_code == 200
        assert r.json()["state"] == "complete"
        assert client.get(f"/api/download/{key}").content == zip_before

    def test_unknown_key_404(self, client):
        assert client.post("/api/process/" + "B" * 22).status_code == 404
        assert client.get("/api/status/" + "B" * 22).status_code == 404

    def test_corrupt_video_fails_job_naming_video(self, client):
        key = _upload(client, [
            ("good.y4m", _clip(1)),
            ("bad.y4m", b"YUV4MPEG2 W64 H48 Cmono\nFRAME\nshort"),
        ]).json()["key"]
        client.post(f"/api/process/{key}")
        st = _wait_terminal(client, key)
        assert st["state"] == "failed"
        assert "bad.y4m" in st["error"] or "video 1" in st["error"]
        assert client.get(f"/api/results/{key}").status_code == 409


class TestResults:
    def test_manifest_contract(self, client):
        key = _complete_job(client, [("a.y4m", _clip(3, bline_cols=(40,))),
                                     ("b two.y4m", _clip(4))])
        manifest = client.get(f"/api/results/{key}").json()
        assert manifest["key"] == key
        assert manifest["download_url"] == f"/api/download/{key}"
        assert len(manifest["videos"]) == 2
        for video in manifest["videos"]:
            assert set(video["urls"]) == {"summarized", "segmented", "tagged"}
            assert len(video["keyframes"]) <= 8
            assert video["annotations_url"].endswith("annotations.json")
            for entry in video["keyframes"]:
                assert set(entry["urls"]) == {"summarized", "segmented", "tagged"}
                assert isinstance(entry["abnormal"], bool)

    def test_manifest_is_byte_stable(self, client):
        key = _complete_job(client)
        a = client.get(f"/api/results/{key}").content
        b = client.get(f"/api/results/{key}").content
        assert a == b

    def test_not_ready_409(self, client):
        key = _upload(client, [("a.y4m", _clip(1))]).json()["key"]
        r = client.get(f"/api/results/{key}")
        assert r.status_code == 409
        assert r.json()["error"] == "not_ready"


class TestKeyframes:
    def test_seeded_resampling(self, client):
        key = _complete_job(client, [("a.y4m", _clip(5, n_frames=20))])
        a = client.get(f"/api/keyframes/{key}/0?n=3&seed=11").json()
        b = client.get(f"/api/keyframes/{key}/0?n=3&seed=11").json()
        assert a == b and len(a) <= 3
        c = client.get(f"/api/keyframes/{key}/0?n=2&seed=999").json()
        assert len(c) == 2
        for entry in c:
            assert set(entry["urls"]) == {"summarized", "segmented", "tagged"}

    def test_unknown_video_404(self, client):
        key = _complete_job(client)
        assert client.get(f"/api/keyframes/{key}/7").status_code == 404

    def test_samples_are_subset_of_summary(self, client):
        key = _complete_job(client, [("a.y4m", _clip(6, n_frames=16))])
        ann = client.get(f"/api/media/{key}/0/annotations.json").json()
        summary_indices = {k["index"] for k in ann["keyframes"]}
        for seed in (1, 2, 3):
            got = client.get(f"/api/keyframes/{key}/0?n=8&seed={seed}").json()
            assert {e["index"] for e in got} <= summary_indices


class TestMedia:
    def test_content_types_and_round_trip(self, client):
        key = _complete_job(client)
        manifest = client.get(f"/api/results/{key}").json()
        video = manifest["videos"][0]
        r = client.get(video["urls"]["tagged"])
        assert r.status_code == 200
        assert r.headers["content-type"] == "video/x-msvideo"
        assert len(videoio.decode(r.content, "t.avi")) == video["keyframe_count"] or True
        assert videoio.decode(r.content, "t.avi")
        png = client.get(video["keyframes"][0]["urls"]["segmented"])
        assert png.headers["content-type"] == "image/png"
        ann = client.get(video["annotations_url"])
        assert ann.headers["content-type"] == "application/json"

    def test_tampered_names_404(self, client):
        key = _complete_job(client)
        assert client.get(f"/api/media/{key}/0/nope.avi").status_code == 404
        assert client.get(f"/api/media/{key}/0/%2e%2e/job.json").status_code == 404
        assert client.get(f"/api/media/{key}/9/summarized.avi").status_code == 404

    def test_cross_key_isolation(self, client):
        key_a = _complete_job(client, [("a.y4m", _clip(7, n_frames=12))])
        key_b = _complete_job(client, [("b.y4m", _clip(8, n_frames=3))])
        man_a = client.get(f"/api/results/{key_a}").json()
        # an artifact name that exists under A but not B
        only_a = [
            e["urls"]["summarized"].split(f"/{key_a}/0/")[1]
            for e in man_a["videos"][0]["keyframes"]
            if client.get(f"/api/media/{key_b}/0/"
                          + e["urls"]["summarized"].split(f"/{key_a}/0/")[1]).status_code == 404
        ]
        assert only_a, "expected at least one artifact unique to job A"
        # and bytes served under B's key always come from B's directory
        a_bytes = client.get(f"/api/media/{key_a}/0/summarized.avi").content
        b_bytes = client.get(f"/api/media/{key_b}/0/summarized.avi").content
        assert a_bytes != b_bytes


class TestDownloadZip:
    def test_layout(self, client):
        key = _complete_job(client, [("one.y4m", _clip(9, bline_cols=(30,))),
                                     ("two !.y4m", _clip(10))])
        r = client.get(f"/api/download/{key}")
        assert r.status_code == 200
        assert r.headers["content-type"] == "application/zip"
        zf = zipfile.ZipFile(io.BytesIO(r.content))
        names = zf.namelist()
        assert "manifest.json" in names
        dirs = {n.split("/")[0] for n in names if "/" in n}
        assert dirs == {"video_0_one.y4m", "video_1_two_.y4m"}
        for d in dirs:
            for artifact in ("summarized.avi", "segmented.avi", "tagged.avi",
                             "annotations.json"):
                assert f"{d}/{artifact}" in names
            assert any(n.startswith(f"{d}/keyframes/frame_") for n in names)
        manifest = json.loads(zf.read("manifest.json"))
        assert manifest == client.get(f"/api/results/{key}").json()

    def test_byte_identical_rebuilds(self, client):
        key = _complete_job(client)
        a = client.get(f"/api/download/{key}").content
        b = client.get(f"/api/download/{key}").content
        assert a == b

    def test_not_ready(self, client):
        key = _upload(client, [("a.y4m", _clip(1))]).json()["key"]
        assert client.get(f"/api/download/{key}").status_code == 409


class TestDurability:
    def test_completed_jobs_survive_restart(self, tmp_path):
        root = str(tmp_path / "data")
        app1 = create_app(ServiceConfig(data_root=root, workers=2))
        with TestClient(app1) as c1:
            key = _complete_job(c1)
            zip_before = c1.get(f"/api/download/{key}").content
        app2 = create_app(ServiceConfig(data_root=root, workers=2))
        with TestClient(app2) as c2:
            assert c2.get(f"/api/status/{key}").json()["state"] == "complete"
            assert c2.get(f"/api/download/{key}").content == zip_before

    def test_interrupted_jobs_restart_as_queued_and_finish(self, tmp_path):
        root = tmp_path / "data"
        store = JobStore(root)
        key = store.create_job([("a.y4m", _clip(2))])
        store.transition(key, "queued")
        store.transition(key, "processing")  # simulate a crash mid-flight
        app = create_app(ServiceConfig(data_root=str(root), workers=2))
        with TestClient(app) as client:
            st = _wait_terminal(client, key)
            assert st["state"] == "complete"


class TestStaticHosting:
    def test_built_frontend_serves_when_present(self, tmp_path):
        dist = Path(__file__).resolve().parent.parent / "frontend" / "dist"
        if not (dist / "index.html").exists():
            pytest.skip("frontend not built (run npm run build in frontend/)")
        app = create_app(ServiceConfig(data_root=str(tmp_path / "d"), workers=1,
                                       static_dir=str(dist)))
        with TestClient(app) as client:
            shell = client.get("/").text
            assert "/js/app.js" in shell
            for asset in ("/js/app.js", "/js/api.js", "/js/router.js",
                          "/js/views.js", "/js/poll.js", "/styles.css"):
                assert client.get(asset).status_code == 200, asset
            assert "/js/app.js" in client.get("/results/" + "A" * 22).text

    def test_spa_fallback_and_assets(self, tmp_path):
        static = tmp_path / "ui"
        static.mkdir()
        (static / "index.html").write_text("<html><body>app shell</body></html>")
        (static / "app.js").write_text("console.log('x')")
        app = create_app(ServiceConfig(data_root=str(tmp_path / "d"), workers=1,
                                       static_dir=str(static)))
        with TestClient(app) as client:
            assert "app shell" in client.get("/").text
            assert client.get("/app.js").status_code == 200
            # client-side routes deep-link to the shell
            assert "app shell" in client.get("/results/" + "A" * 22).text
            assert "app shell" in client.get("/about").text
            # missing real assets still 404
            assert client.get("/missing.js").status_code == 404
            # API routes keep priority over the mount
            assert client.get("/api/health").status_code == 200


class TestConfig:
    def test_load_with_env_override(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"port": 9000, "max_videos": 4}))
        monkeypatch.setenv("LUSKIT_MAX_VIDEOS", "7")
        cfg = load_config(cfg_path)
        assert cfg.port == 9000
        assert cfg.max_videos == 7

    def test_unknown_keys_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"nonsense": 1}))
        with pytest.raises(ValueError):
            load_config(cfg_path)

    def test_defaults_validate(self):
        cfg = ServiceConfig()
        assert cfg.max_videos == 16
        assert cfg.max_upload_bytes == 256 * 1024 * 1024
        cfg.pipeline_config()
