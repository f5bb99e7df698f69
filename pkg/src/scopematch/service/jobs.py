"""Asynchronous job store and worker.

Jobs live under ``<data_dir>/jobs/<id>/`` with their inputs, outputs and a
``job.json`` state record written atomically on every transition
(queued -> running -> done | failed). On startup any job found ``running``
(a crash artifact) is recovered to ``queued`` and re-enqueued; one worker
thread serves the FIFO queue, matching the one-pass-at-a-time backend.
Completed jobs older than the configured TTL are pruned on submission.
"""

from __future__ import annotations

import json
import os
import queue
import shutil
import threading
import time
import uuid
import zipfile

import numpy as np

from .. import api
from ..core import (
    ExemplarBox,
    ImageSequence,
    RunConfig,
    TaskKind,
    load_image,
    write_float_tiff,
    write_label_tiff,
)
from ..errors import ScopeMatchError
from ..tracking import write_ctc, write_trajectories
from .config import ServiceConfig
from .overlay import density_heatmap, instance_overlay, trajectory_overlay

TERMINAL = ("done", "failed")
ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


class JobStore:
    def __init__(self, config: ServiceConfig, components: api.PipelineComponents,
                 start_worker: bool = True):
        self.config = config
        self.components = components
        self.jobs_dir = os.path.join(config.data_dir, "jobs")
        os.makedirs(self.jobs_dir, exist_ok=True)
        self._queue: "queue.Queue[str]" = queue.Queue()
        self._lock = threading.Lock()
        self._recover()
        self._worker = None
        if start_worker:
            self._worker = threading.Thread(target=self._work, daemon=True)
            self._worker.start()

    # --- persistence ---

    def _job_dir(self, job_id: str) -> str:
        return os.path.join(self.jobs_dir, job_id)

    def _record_path(self, job_id: str) -> str:
        return os.path.join(self._job_dir(job_id), "job.json")

    def read(self, job_id: str) -> dict | None:
        path = self._record_path(job_id)
        if not os.path.isfile(path):
            return None
        with open(path) as fh:
            return json.load(fh)

    def _write(self, record: dict) -> None:
        path = self._record_path(record["id"])
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
        os.replace(tmp, path)

    def _recover(self) -> None:
        for job_id in sorted(os.listdir(self.jobs_dir)) if os.path.isdir(self.jobs_dir) else []:
            record = self.read(job_id)
            if record is None:
                continue
            if record["status"] in ("running", "queued"):
                record["status"] = "queued"
                self._write(record)
                self._queue.put(job_id)

    def _prune_expired(self) -> None:
        ttl = self.config.result_ttl_seconds
        if ttl is None:
            return
        cutoff = time.time() - ttl
        for job_id in os.listdir(self.jobs_dir):
            record = self.read(job_id)
            if record and record["status"] in TERMINAL and record.get("created_at", 0) < cutoff:
                shutil.rmtree(self._job_dir(job_id), ignore_errors=True)

    # --- submission ---

    def submit(self, task: str, boxes: list[ExemplarBox], seed: int,
               files: list[tuple[str, bytes]]) -> dict:
        self._prune_expired()
        job_id = uuid.uuid4().hex[:12]
        job_dir = self._job_dir(job_id)
        inputs_dir = os.path.join(job_dir, "inputs")
        os.makedirs(inputs_dir, exist_ok=True)
        input_names = []
        for i, (name, data) in enumerate(files):
            ext = os.path.splitext(name)[1].lower() or ".png"
            safe = f"input_{i:03d}{ext}"
            with open(os.path.join(inputs_dir, safe), "wb") as fh:
                fh.write(data)
            input_names.append(safe)
        record = {
            "id": job_id,
            "task": task,
            "mode": "S" if boxes else "A",
            "status": "queued",
            "boxes": [[b.x0, b.y0, b.w, b.h] for b in boxes],
            "seed": seed,
            "inputs": input_names,
            "results": [],
            "error": None,
            "timings_ms": None,
            "created_at": time.time(),
        }
        self._write(record)
        self._queue.put(job_id)
        return record

    # --- worker ---

    def _work(self) -> None:
        while True:
            job_id = self._queue.get()
            record = self.read(job_id)
            if record is None or record["status"] != "queued":
                continue
            record["status"] = "running"
            self._write(record)
            started = time.perf_counter()
            try:
                results = self._execute(record)
                record = self.read(job_id) or record
                record["status"] = "done"
                record["results"] = results
            except ScopeMatchError as exc:
                record["status"] = "failed"
                record["error"] = str(exc)
            except Exception as exc:  # keep the worker alive on surprises
                record["status"] = "failed"
                record["error"] = f"internal error: {exc}"
            record["timings_ms"] = round((time.perf_counter() - started) * 1000.0, 3)
            self._write(record)

    def _execute(self, record: dict) -> list[str]:
        job_dir = self._job_dir(record["id"])
        out_dir = os.path.join(job_dir, "outputs")
        overlays = os.path.join(out_dir, "overlays")
        os.makedirs(overlays, exist_ok=True)
        boxes = [ExemplarBox(*b) for b in record["boxes"]]
        seed = int(record["seed"])
        images = [load_image(os.path.join(job_dir, "inputs", name))
                  for name in record["inputs"]]
        cfg = RunConfig(task=TaskKind(record["task"]), exemplar_boxes=boxes,
                        rng_seed=seed, resize_edge=self.config.resize_edge)
        comps = self.components
        results = []

        if record["task"] == "segmentation":
            from ..heads.segmentation import segment

            comps.require("seg_head")
            bundle, plan = api.match_image(images[0], boxes, cfg, comps)
            result = segment(bundle, comps.seg_head, plan=plan)
            write_label_tiff(os.path.join(out_dir, "labels.tif"), result.labels)
            instance_overlay(images[0], result.labels, seed).save(
                os.path.join(overlays, "instances.png"))
            self._attention_png(bundle, os.path.join(overlays, "attention.png"))
            results = ["labels.tif", "overlays/instances.png", "overlays/attention.png"]
        elif record["task"] == "counting":
            from ..heads.counting import count

            comps.require("count_head")
            bundle, plan = api.match_image(images[0], boxes, cfg, comps)
            density = count(bundle, comps.count_head, plan=plan)
            write_float_tiff(os.path.join(out_dir, "density.tif"), density.values)
            with open(os.path.join(out_dir, "count.json"), "w") as fh:
                json.dump({"count_float": round(density.total, 4),
                           "count_int": density.count}, fh, indent=2, sort_keys=True)
            density_heatmap(density.values).save(os.path.join(overlays, "density.png"))
            self._attention_png(bundle, os.path.join(overlays, "attention.png"))
            results = ["count.json", "density.tif", "overlays/density.png",
                       "overlays/attention.png"]
        else:
            graph = api.analyze_tracking(ImageSequence(frames=images), boxes, cfg, comps)
            ctc_dir = os.path.join(out_dir, "ctc")
            written = write_ctc(graph, ctc_dir)
            write_trajectories(graph, os.path.join(out_dir, "trajectories.json"))
            for t, frame in enumerate(graph.frames):
                instance_overlay(images[t], frame, seed).save(
                    os.path.join(overlays, f"frame_{t:03d}.png"))
            trajectory_overlay(images[-1], graph, seed).save(
                os.path.join(overlays, "trajectories.png"))
            results = sorted([os.path.relpath(p, out_dir) for p in written]
                             + ["trajectories.json", "overlays/trajectories.png"]
                             + [f"overlays/frame_{t:03d}.png" for t in range(len(graph.frames))])

        manifest = {
            "task": record["task"],
            "mode": record["mode"],
            "boxes": record["boxes"],
            "seed": seed,
            "inputs": record["inputs"],
            "outputs": sorted(results),
            "backend": comps.backend.descriptor.kind,
            "resize_edge": self.config.resize_edge,
        }
        with open(os.path.join(out_dir, "run_manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        return sorted(results + ["run_manifest.json"])

    @staticmethod
    def _attention_png(bundle, path: str) -> None:
        from ..matching import minmax_normalize

        density_heatmap(minmax_normalize(bundle.m_sc)).save(path)

    # --- results ---

    def result_file(self, job_id: str, rel_path: str) -> str | None:
        """Absolute path of one result file, confined to the job's output dir."""
        out_dir = os.path.realpath(os.path.join(self._job_dir(job_id), "outputs"))
        full = os.path.realpath(os.path.join(out_dir, rel_path))
        if not full.startswith(out_dir + os.sep) and full != out_dir:
            return None
        return full if os.path.isfile(full) else None

    def archive(self, job_id: str) -> bytes | None:
        record = self.read(job_id)
        if record is None or record["status"] != "done":
            return None
        out_dir = os.path.join(self._job_dir(job_id), "outputs")
        entries = []
        for root, _, names in os.walk(out_dir):
            for name in names:
                full = os.path.join(root, name)
                entries.append((os.path.relpath(full, out_dir), full))
        import io

        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            for rel, full in sorted(entries):
                info = zipfile.ZipInfo(rel, date_time=ZIP_EPOCH)
                info.compress_type = zipfile.ZIP_DEFLATED
                with open(full, "rb") as fh:
                    zf.writestr(info, fh.read())
        return buf.getvalue()
