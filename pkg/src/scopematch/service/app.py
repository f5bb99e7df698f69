"""REST API over the analysis pipeline.

POST /api/jobs              multipart: task, boxes (JSON), seed, images -> {id}
GET  /api/jobs/{id}         job summary
GET  /api/jobs/{id}/result  zip archive of outputs + visualization PNGs

400 on malformed requests (field-level message), 404 on unknown ids, 409 when
the result is not ready. If a built frontend is present its static files are
served at the root path.
"""

from __future__ import annotations

import json
import os

from fastapi import FastAPI, File, Form, HTTPException, Response, UploadFile

from .. import api
from ..core import ExemplarBox
from ..errors import DegenerateBox
from .config import ServiceConfig
from .jobs import JobStore

TASKS = {"seg": "segmentation", "segmentation": "segmentation",
         "track": "tracking", "tracking": "tracking",
         "count": "counting", "counting": "counting"}


def _parse_boxes(raw: str | None) -> list[ExemplarBox]:
    if not raw:
        return []
    try:
        data = json.loads(raw)
        if not isinstance(data, list):
            raise ValueError("expected a list of boxes")
        boxes = []
        for i, item in enumerate(data):
            if isinstance(item, dict):
                boxes.append(ExemplarBox(float(item["x0"]), float(item["y0"]),
                                         float(item["w"]), float(item["h"])))
            else:
                x0, y0, w, h = (float(v) for v in item)
                boxes.append(ExemplarBox(x0, y0, w, h))
        return boxes
    except (ValueError, TypeError, KeyError, DegenerateBox) as exc:
        raise HTTPException(status_code=400,
                            detail={"field": "boxes", "message": str(exc)}) from exc


def _summary(record: dict) -> dict:
    return {k: record[k] for k in ("id", "task", "mode", "status", "boxes", "seed",
                                   "inputs", "results", "error", "timings_ms")}


def create_app(config: ServiceConfig | None = None,
               components: api.PipelineComponents | None = None) -> FastAPI:
    config = config or ServiceConfig.load()
    if components is None:
        components = api.load_components(config.checkpoint_dir, backend_kind=config.backend,
                                         model_id=config.model_id, device=config.device)
    store = JobStore(config, components)
    app = FastAPI(title="scopematch service")
    app.state.store = store
    app.state.config = config

    @app.get("/api/health")
    def health():
        return {"status": "ok", "backend": components.backend.descriptor.kind}

    @app.post("/api/jobs")
    async def submit(task: str = Form(...), boxes: str | None = Form(None),
                     seed: int = Form(0), images: list[UploadFile] = File(...)):
        if task not in TASKS:
            raise HTTPException(status_code=400,
                                detail={"field": "task", "message": f"unknown task {task!r}"})
        canonical = TASKS[task]
        parsed_boxes = _parse_boxes(boxes)
        if not images:
            raise HTTPException(status_code=400,
                                detail={"field": "images", "message": "no images uploaded"})
        if canonical == "tracking" and len(images) < 2:
            raise HTTPException(status_code=400,
                                detail={"field": "images",
                                        "message": "tracking needs at least two frames"})
        if canonical != "tracking" and len(images) != 1:
            raise HTTPException(status_code=400,
                                detail={"field": "images",
                                        "message": f"{canonical} takes exactly one image"})
        files = []
        for up in images:
            data = await up.read()
            if len(data) > config.max_upload_bytes:
                raise HTTPException(status_code=400,
                                    detail={"field": "images",
                                            "message": "upload exceeds size limit"})
            files.append((up.filename or "image.png", data))
        record = store.submit(canonical, parsed_boxes, seed, files)
        return {"id": record["id"], "status": record["status"]}

    @app.get("/api/jobs/{job_id}")
    def status(job_id: str):
        record = store.read(job_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown job id")
        return _summary(record)

    @app.get("/api/jobs/{job_id}/result")
    def result(job_id: str):
        record = store.read(job_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown job id")
        if record["status"] != "done":
            raise HTTPException(status_code=409,
                                detail=f"result not ready: status {record['status']}")
        data = store.archive(job_id)
        return Response(content=data, media_type="application/zip",
                        headers={"Content-Disposition":
                                 f'attachment; filename="scopematch_{job_id}.zip"'})

    @app.get("/api/jobs/{job_id}/files/{path:path}")
    def result_file(job_id: str, path: str):
        """Individual result files (overlays, JSON) for the browser UI."""
        record = store.read(job_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown job id")
        if record["status"] != "done":
            raise HTTPException(status_code=409,
                                detail=f"result not ready: status {record['status']}")
        full = store.result_file(job_id, path)
        if full is None:
            raise HTTPException(status_code=404, detail="no such result file")
        media = {"png": "image/png", "json": "application/json",
                 "tif": "image/tiff", "txt": "text/plain"}
        ext = os.path.splitext(path)[1].lstrip(".").lower()
        with open(full, "rb") as fh:
            return Response(content=fh.read(),
                            media_type=media.get(ext, "application/octet-stream"))

    frontend_dist = os.environ.get("SCOPEMATCH_FRONTEND_DIST",
                                   os.path.join(os.getcwd(), "frontend", "dist"))
    if os.path.isdir(frontend_dist):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dist, html=True), name="ui")

    return app
