"""Batch benchmark runs over a manifest: multi-exemplar and imprecise-box studies.

Per sample the full pipeline runs with seeded exemplar selection (mode S
derives ``n_exemplars`` boxes from the ground-truth annotations, optionally
perturbed into a chosen imprecision kind); the metrics module scores each
prediction and the aggregate. Reports are written as JSON and CSV with no
time-dependent content, so identical seeds give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from ..api import PipelineComponents, conditioning_from_boxes, prepare_input
from ..core.config import RunConfig, TaskKind
from ..core.image import ImageSequence, load_image
from ..core.io import read_label_tiff
from ..errors import ManifestError
from ..heads.counting import count as run_count
from ..heads.segmentation import segment as run_segment
from ..matching import run_matching
from ..metrics import (
    CountRecord,
    RMSE_CONVENTIONAL,
    RMSE_PAPER_LITERAL,
    average_precision,
    mae,
    rmse,
    seg_score,
    tra_lnk,
)
from ..tracking import parse_ctc, track_sequence
from ..training.datasets import Manifest
from ..training.prep import exemplar_box_from_labels
from .boxes import BoxErrorKind, perturb_box

TASK_NAMES = {"segmentation": TaskKind.SEGMENTATION, "tracking": TaskKind.TRACKING,
              "counting": TaskKind.COUNTING}


def _sample_boxes(labels, n_exemplars, perturbation, rng):
    boxes = [exemplar_box_from_labels(labels, rng) for _ in range(n_exemplars)]
    if perturbation is not None:
        boxes = [perturb_box(b, perturbation, seed=int(rng.integers(0, 2**31)))
                 for b in boxes]
    return boxes


def _box_record(boxes):
    return [[round(b.x0, 3), round(b.y0, 3), round(b.w, 3), round(b.h, 3)] for b in boxes]


def run_benchmark(manifest: Manifest, task: str, mode: str, comps: PipelineComponents,
                  n_exemplars: int = 1, perturbation: BoxErrorKind | None = None,
                  seed: int = 0, split: str | None = None,
                  resize_edge: int | None = None) -> dict:
    if task not in TASK_NAMES:
        raise ManifestError(f"unknown task {task!r}")
    if mode not in ("S", "A"):
        raise ManifestError(f"mode must be 'S' or 'A', got {mode!r}")
    if mode == "A" and perturbation is not None:
        raise ManifestError("box perturbations require exemplar mode")
    entries = manifest.select(task=task, split=split)
    if not entries:
        raise ManifestError(f"manifest has no {task} samples")

    rng = np.random.default_rng(seed)
    per_sample = []
    records = []

    for entry in entries:
        if task == "tracking":
            frames = [load_image(manifest.path(p)) for p in entry.frames]
            gt_graph = parse_ctc(manifest.path(entry.ctc_dir))
            edge = resize_edge or frames[0].width
            boxes = []
            if mode == "S":
                boxes = _sample_boxes(gt_graph.frames[0], n_exemplars, perturbation, rng)
            cfg = RunConfig(task=TaskKind.TRACKING, exemplar_boxes=boxes,
                            rng_seed=seed, resize_edge=edge)
            comps.require("seg_head", "linkage_head")
            graph = track_sequence(ImageSequence(frames=frames), cfg, comps.backend,
                                   comps.projector, comps.seg_head, comps.linkage_head,
                                   matching=comps.matching)
            tra, lnk = tra_lnk(graph, gt_graph)
            seg = seg_score(list(graph.frames), list(gt_graph.frames))
            per_sample.append({"id": entry.id, "tra": tra, "lnk": lnk, "seg": seg,
                               "boxes": _box_record(boxes)})
            continue

        img = load_image(manifest.path(entry.image))
        labels = read_label_tiff(manifest.path(entry.labels)) if entry.labels else None
        edge = resize_edge or img.width
        boxes = []
        if mode == "S":
            if labels is None:
                raise ManifestError(f"sample {entry.id} has no labels for exemplar mode")
            boxes = _sample_boxes(labels, n_exemplars, perturbation, rng)
        cfg = RunConfig(task=TASK_NAMES[task], exemplar_boxes=boxes, rng_seed=seed,
                        resize_edge=edge)
        resized, mapped, plan = prepare_input(img, boxes, cfg)
        embedding = conditioning_from_boxes(resized, mapped, comps)
        bundle = run_matching(resized, embedding, cfg, comps.backend, config=comps.matching)

        if task == "segmentation":
            comps.require("seg_head")
            pred = run_segment(bundle, comps.seg_head, plan=plan)
            res = average_precision(pred, labels)
            per_sample.append({"id": entry.id, "ap@0.5": res.at(0.5),
                               "mean_ap": res.mean_ap, "boxes": _box_record(boxes)})
        else:
            comps.require("count_head")
            density = run_count(bundle, comps.count_head, plan=plan)
            with open(manifest.path(entry.dots)) as fh:
                gt_count = float(len(json.load(fh)["dots"]))
            records.append(CountRecord(c_pred=density.total, c_gt=gt_count))
            per_sample.append({"id": entry.id, "pred_count": round(density.total, 4),
                               "pred_count_int": density.count, "gt_count": gt_count,
                               "boxes": _box_record(boxes)})

    aggregate: dict = {}
    if task == "segmentation":
        aggregate = {"mean_ap@0.5": float(np.mean([s["ap@0.5"] for s in per_sample])),
                     "mean_ap": float(np.mean([s["mean_ap"] for s in per_sample]))}
    elif task == "tracking":
        aggregate = {k: float(np.mean([s[k] for s in per_sample])) for k in ("tra", "lnk", "seg")}
    else:
        aggregate = {"mae": mae(records),
                     "rmse": rmse(records, RMSE_CONVENTIONAL),
                     "rmse_paper_literal": rmse(records, RMSE_PAPER_LITERAL)}

    return {
        "task": task,
        "mode": mode,
        "n_exemplars": n_exemplars if mode == "S" else 0,
        "perturbation": perturbation.value if perturbation else None,
        "seed": seed,
        "backend": comps.backend.descriptor.kind,
        "samples": per_sample,
        "aggregate": aggregate,
        "metric_variants": {"rmse": [RMSE_CONVENTIONAL, RMSE_PAPER_LITERAL]},
    }


def write_report(report: dict, out_dir: str) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, "report.json")
    with open(json_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    csv_path = os.path.join(out_dir, "report.csv")
    fields = sorted({k for s in report["samples"] for k in s if k != "boxes"})
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(report["samples"])
    return json_path, csv_path
