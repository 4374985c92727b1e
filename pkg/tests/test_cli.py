import io
import json
import socket
import zipfile
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from luskit import videoio
from luskit.cli import main
from luskit.phantom import PhantomSpec, generate
from luskit.service.app import create_app
from luskit.service.config import ServiceConfig


def _write_spec(path: Path, **kwargs) -> dict:
    spec = {"width": 64, "height": 64, "pleura_row": 16, "noise_seed": 5,
            "n_frames": 6, **kwargs}
    path.write_text(json.dumps(spec))
    return spec


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


class TestPhantomCommand:
    def test_writes_decodable_clip_and_ground_truth(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        _write_spec(spec_path, bline_cols=[40])
        out = tmp_path / "clip.y4m"
        assert main(["phantom", str(spec_path), "--out", str(out)]) == 0
        seq = videoio.decode(out.read_bytes(), "clip.y4m")
        assert len(seq) == 6
        gt = json.loads((tmp_path / "clip.y4m.gt.json").read_text())
        assert gt["n_frames"] == 6
        assert gt["frames"][0]["abnormal"] is True

    def test_invalid_spec_exits_1(self, tmp_path, capsys):
        spec_path = tmp_path / "bad.json"
        _write_spec(spec_path, pleura_row=60)
        assert main(["phantom", str(spec_path), "--out", str(tmp_path / "x.y4m")]) == 1
        assert "pleura" in capsys.readouterr().err

    def test_reruns_are_identical(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        _write_spec(spec_path, shadow_cols=[[10, 18]])
        a, b = tmp_path / "a.y4m", tmp_path / "b.y4m"
        assert main(["phantom", str(spec_path), "--out", str(a)]) == 0
        assert main(["phantom", str(spec_path), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.y4m.gt.json").read_text() == (tmp_path / "b.y4m.gt.json").read_text()


class TestAnalyzeCommand:
    @pytest.fixture()
    def clip(self, tmp_path):
        spec = PhantomSpec(width=64, height=64, pleura_row=16, bline_cols=(40,),
                           noise_seed=5, n_frames=8)
        seq, _ = generate(spec)
        path = tmp_path / "clip.y4m"
        path.write_bytes(videoio.encode_y4m(seq))
        return path

    def test_layout_and_abnormal_count(self, tmp_path, clip, capsys):
        out = tmp_path / "run"
        assert main(["analyze", str(clip), "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "keyframes" in printed and "abnormal" in printed
        vdir = out / "video_0_clip.y4m"
        for artifact in ("summarized.avi", "segmented.avi", "tagged.avi",
                         "annotations.json"):
            assert (vdir / artifact).is_file()
        assert list((vdir / "keyframes").glob("frame_*_tagged.png"))
        assert (out / "manifest.json").is_file()
        ann = json.loads((vdir / "annotations.json").read_text())
        assert sum(1 for k in ann["keyframes"] if k["abnormal"]) >= 1

    def test_json_report(self, tmp_path, clip, capsys):
        out = tmp_path / "run"
        assert main(["analyze", str(clip), "--json", "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        report = json.loads(stdout[stdout.index("{"):])
        assert report["videos"][0]["keyframes"] >= 1
        assert report["failed"] == []

    def test_unreadable_input_exits_1_but_processes_rest(self, tmp_path, clip, capsys):
        out = tmp_path / "run"
        rc = main(["analyze", str(tmp_path / "missing.y4m"), str(clip),
                   "--out", str(out)])
        assert rc == 1
        assert (out / "video_1_clip.y4m" / "summarized.avi").is_file()

    def test_reruns_byte_identical(self, tmp_path, clip):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["analyze", str(clip), "--out", str(out1)]) == 0
        assert main(["analyze", str(clip), "--out", str(out2)]) == 0
        t1, t2 = _tree_bytes(out1), _tree_bytes(out2)
        assert t1.keys() == t2.keys()
        assert all(t1[k] == t2[k] for k in t1)

    def test_layout_matches_zip_download(self, tmp_path, clip):
        out = tmp_path / "run"
        assert main(["analyze", str(clip), "--out", str(out)]) == 0
        app = create_app(ServiceConfig(data_root=str(tmp_path / "data"), workers=1))
        with TestClient(app) as client:
            r = client.post("/api/upload", files=[
                ("videos", ("clip.y4m", clip.read_bytes(), "application/octet-stream")),
            ])
            key = r.json()["key"]
            client.post(f"/api/process/{key}")
            import time
            for _ in range(400):
                if client.get(f"/api/status/{key}").json()["state"] in ("complete", "failed"):
                    break
                time.sleep(0.05)
            zf = zipfile.ZipFile(io.BytesIO(client.get(f"/api/download/{key}").content))
        zip_names = {n for n in zf.namelist() if not n.endswith("/")}
        tree_names = set(_tree_bytes(out))
        assert zip_names == tree_names
        # artifact bytes agree too; manifests differ only by key/URL prefixes
        for name in sorted(zip_names - {"manifest.json"}):
            assert zf.read(name) == (out / name).read_bytes(), name

    def test_usage_error_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["analyze"])  # missing --out and inputs
        assert exc.value.code == 2


class TestServeCommand:
    def test_occupied_port_exits_1(self, tmp_path, capsys):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.bind(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        try:
            rc = main(["serve", "--data-root", str(tmp_path / "data"),
                       "--port", str(port)])
        finally:
            blocker.close()
        assert rc == 1
        assert str(port) in capsys.readouterr().err

    def test_missing_data_root_parent_exits_1(self, tmp_path, capsys):
        rc = main(["serve", "--data-root", str(tmp_path / "no" / "such" / "dir")])
        assert rc == 1
        assert "data root" in capsys.readouterr().err

    def test_bad_config_exits_1(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json}")
        assert main(["serve", "--config", str(cfg)]) == 1
