import io
import json
import os
import time
import zipfile

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from scopematch.api import load_components
from scopematch.service import JobStore, ServiceConfig, create_app
from scopematch.synthetic import blob_sample, moving_sequence

from test_cli import checkpoints  # noqa: F401  (session fixture reuse)


def _png_bytes(pixels) -> bytes:
    buf = io.BytesIO()
    Image.fromarray((pixels * 255).astype(np.uint8)).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture()
def client(tmp_path, checkpoints):  # noqa: F811
    config = ServiceConfig(data_dir=str(tmp_path / "data"), backend="mock",
                           checkpoint_dir=checkpoints, resize_edge=128)
    app = create_app(config)
    return TestClient(app)


def _wait_done(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/api/jobs/{job_id}").json()
        if record["status"] in ("done", "failed"):
            return record
        time.sleep(0.05)
    raise TimeoutError("job did not finish")


def _submit_count(client, seed=0):
    rng = np.random.default_rng(3)
    sample = blob_sample(rng, size=128)
    files = [("images", ("cells.png", _png_bytes(sample.image.pixels), "image/png"))]
    b = sample.boxes[0]
    data = {"task": "count", "seed": str(seed),
            "boxes": json.dumps([[b.x0, b.y0, b.w, b.h]])}
    resp = client.post("/api/jobs", data=data, files=files)
    return resp, sample


class TestLifecycle:
    def test_submit_poll_download(self, client):
        resp, _ = _submit_count(client)
        assert resp.status_code == 200
        job_id = resp.json()["id"]
        record = _wait_done(client, job_id)
        assert record["status"] == "done", record["error"]
        assert record["mode"] == "S"
        assert record["timings_ms"] is not None
        result = client.get(f"/api/jobs/{job_id}/result")
        assert result.status_code == 200
        zf = zipfile.ZipFile(io.BytesIO(result.content))
        names = set(zf.namelist())
        assert {"count.json", "density.tif", "overlays/density.png",
                "run_manifest.json"} <= names

    def test_result_echoes_boxes(self, client):
        resp, sample = _submit_count(client)
        job_id = resp.json()["id"]
        _wait_done(client, job_id)
        zf = zipfile.ZipFile(io.BytesIO(client.get(f"/api/jobs/{job_id}/result").content))
        manifest = json.loads(zf.read("run_manifest.json"))
        b = sample.boxes[0]
        echoed = manifest["boxes"][0]
        assert echoed == pytest.approx([b.x0, b.y0, b.w, b.h], abs=0.5)

    def test_segmentation_job(self, client):
        rng = np.random.default_rng(5)
        sample = blob_sample(rng, size=128)
        files = [("images", ("a.png", _png_bytes(sample.image.pixels), "image/png"))]
        resp = client.post("/api/jobs", data={"task": "segmentation", "seed": "0"},
                           files=files)
        record = _wait_done(client, resp.json()["id"])
        assert record["status"] == "done", record["error"]
        assert "labels.tif" in record["results"]
        assert "overlays/instances.png" in record["results"]

    def test_tracking_job(self, client):
        rng = np.random.default_rng(6)
        seq, _, _ = moving_sequence(rng, size=128, n_blobs=2, n_frames=3)
        files = [("images", (f"t{t}.png", _png_bytes(f.pixels), "image/png"))
                 for t, f in enumerate(seq.frames)]
        resp = client.post("/api/jobs", data={"task": "track", "seed": "0"}, files=files)
        record = _wait_done(client, resp.json()["id"])
        assert record["status"] == "done", record["error"]
        assert "res_track.txt" in {os.path.basename(r) for r in record["results"]}
        assert "overlays/trajectories.png" in record["results"]

    def test_result_not_ready_409(self, client, tmp_path):
        resp, _ = _submit_count(client)
        job_id = resp.json()["id"]
        # poll the result endpoint immediately; tolerate the race where the
        # worker already finished
        r = client.get(f"/api/jobs/{job_id}/result")
        assert r.status_code in (200, 409)
        record = _wait_done(client, job_id)
        assert record["status"] == "done"


class TestValidation:
    def test_unknown_job_404(self, client):
        assert client.get("/api/jobs/doesnotexist").status_code == 404
        assert client.get("/api/jobs/doesnotexist/result").status_code == 404

    def test_malformed_boxes_400_with_field(self, client):
        files = [("images", ("a.png", _png_bytes(np.zeros((32, 32))), "image/png"))]
        resp = client.post("/api/jobs", data={"task": "seg", "boxes": "[[1,2]]"},
                           files=files)
        assert resp.status_code == 400
        assert resp.json()["detail"]["field"] == "boxes"

    def test_unknown_task_400(self, client):
        files = [("images", ("a.png", _png_bytes(np.zeros((32, 32))), "image/png"))]
        resp = client.post("/api/jobs", data={"task": "classify"}, files=files)
        assert resp.status_code == 400
        assert resp.json()["detail"]["field"] == "task"

    def test_tracking_needs_two_frames(self, client):
        files = [("images", ("a.png", _png_bytes(np.zeros((32, 32))), "image/png"))]
        resp = client.post("/api/jobs", data={"task": "track"}, files=files)
        assert resp.status_code == 400

    def test_upload_size_limit(self, tmp_path, checkpoints):  # noqa: F811
        config = ServiceConfig(data_dir=str(tmp_path / "d"), backend="mock",
                               checkpoint_dir=checkpoints, max_upload_bytes=10)
        client = TestClient(create_app(config))
        files = [("images", ("a.png", _png_bytes(np.zeros((64, 64))), "image/png"))]
        resp = client.post("/api/jobs", data={"task": "seg"}, files=files)
        assert resp.status_code == 400


class TestDeterminismAndConfinement:
    def test_identical_submissions_identical_archives(self, client):
        ids = []
        for _ in range(2):
            resp, _ = _submit_count(client, seed=11)
            ids.append(resp.json()["id"])
        for job_id in ids:
            _wait_done(client, job_id)
        archives = [client.get(f"/api/jobs/{i}/result").content for i in ids]
        assert archives[0] == archives[1]

    def test_archive_paths_confined(self, client):
        resp, _ = _submit_count(client)
        job_id = resp.json()["id"]
        _wait_done(client, job_id)
        zf = zipfile.ZipFile(io.BytesIO(client.get(f"/api/jobs/{job_id}/result").content))
        for name in zf.namelist():
            assert not name.startswith("/")
            assert ".." not in name

    def test_result_file_endpoint(self, client):
        resp, _ = _submit_count(client)
        job_id = resp.json()["id"]
        _wait_done(client, job_id)
        r = client.get(f"/api/jobs/{job_id}/files/count.json")
        assert r.status_code == 200
        assert set(r.json()) == {"count_float", "count_int"}
        png = client.get(f"/api/jobs/{job_id}/files/overlays/density.png")
        assert png.status_code == 200
        assert png.headers["content-type"] == "image/png"

    def test_result_file_traversal_blocked(self, client):
        resp, _ = _submit_count(client)
        job_id = resp.json()["id"]
        _wait_done(client, job_id)
        r = client.get(f"/api/jobs/{job_id}/files/..%2Fjob.json")
        assert r.status_code == 404
        r2 = client.get(f"/api/jobs/{job_id}/files/nope.json")
        assert r2.status_code == 404


class TestCrashConsistency:
    def test_running_job_recovered_to_queued(self, tmp_path, checkpoints):  # noqa: F811
        config = ServiceConfig(data_dir=str(tmp_path / "data"), backend="mock",
                               checkpoint_dir=checkpoints)
        jobs_dir = tmp_path / "data" / "jobs" / "deadbeef0001"
        jobs_dir.mkdir(parents=True)
        record = {"id": "deadbeef0001", "task": "counting", "mode": "A", "status": "running",
                  "boxes": [], "seed": 0, "inputs": ["input_000.png"], "results": [],
                  "error": None, "timings_ms": None, "created_at": time.time()}
        (jobs_dir / "job.json").write_text(json.dumps(record))
        comps = load_components(checkpoints, backend_kind="mock")
        store = JobStore(config, comps, start_worker=False)
        recovered = store.read("deadbeef0001")
        assert recovered["status"] == "queued"

    def test_ttl_prunes_old_done_jobs(self, tmp_path, checkpoints):  # noqa: F811
        config = ServiceConfig(data_dir=str(tmp_path / "data"), backend="mock",
                               checkpoint_dir=checkpoints, result_ttl_seconds=0.0)
        jobs_dir = tmp_path / "data" / "jobs" / "oldjob000001"
        jobs_dir.mkdir(parents=True)
        record = {"id": "oldjob000001", "task": "counting", "mode": "A", "status": "done",
                  "boxes": [], "seed": 0, "inputs": [], "results": [], "error": None,
                  "timings_ms": 1.0, "created_at": time.time() - 10}
        (jobs_dir / "job.json").write_text(json.dumps(record))
        comps = load_components(checkpoints, backend_kind="mock")
        store = JobStore(config, comps, start_worker=False)
        store.submit("counting", [], 0, [("a.png", b"x")])
        assert store.read("oldjob000001") is None


class TestConfig:
    def test_env_overrides(self, tmp_path, monkeypatch):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"backend": "mock", "resize_edge": 256}))
        monkeypatch.setenv("SCOPEMATCH_RESIZE_EDGE", "128")
        monkeypatch.setenv("SCOPEMATCH_DATA_DIR", str(tmp_path / "xyz"))
        cfg = ServiceConfig.load(str(cfg_file))
        assert cfg.resize_edge == 128
        assert cfg.data_dir == str(tmp_path / "xyz")
        assert cfg.backend == "mock"
