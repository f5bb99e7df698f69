"""Synthetic blob suites for desk-scale testing, demos and overfit sanity runs.

Images are bright anti-aliased disks on a noisy dark background, sized so
objects stay well resolved on the backend's pooled grid. Generators are fully
seeded; ``write_suite`` lays a suite out on disk together with the manifest
format the training and benchmark code consume.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .core.geometry import ExemplarBox
from .core.image import ImageSequence, InputImage
from .core.io import write_label_tiff
from .tracking.ctc import write_ctc
from .tracking.graph import TrackingGraph, graph_from_consistent_frames


@dataclass
class BlobSample:
    image: InputImage
    labels: np.ndarray
    dots: list[tuple[float, float]]
    boxes: list[ExemplarBox] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.dots)


def _render(size: int, blobs: list[tuple[float, float, float, float]],
            bg: float, noise: float, rng: np.random.Generator) -> tuple[InputImage, np.ndarray]:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32)
    pixels = np.full((size, size), bg, np.float32)
    labels = np.zeros((size, size), np.int32)
    for i, (cx, cy, r, intensity) in enumerate(blobs, start=1):
        dist = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
        coverage = np.clip(r + 0.5 - dist, 0.0, 1.0)
        pixels = np.maximum(pixels, bg + (intensity - bg) * coverage)
        labels[dist <= r] = i
    if noise > 0:
        pixels = pixels + rng.normal(0.0, noise, pixels.shape).astype(np.float32)
    return InputImage(pixels=np.clip(pixels, 0.0, 1.0)), labels


def _place_centers(rng: np.random.Generator, size: int, n: int, radius_hi: float,
                   min_gap: float) -> list[tuple[float, float]]:
    centers: list[tuple[float, float]] = []
    margin = radius_hi + 2.0
    for _ in range(4000):
        if len(centers) == n:
            break
        cx = float(rng.uniform(margin, size - margin))
        cy = float(rng.uniform(margin, size - margin))
        if all((cx - x) ** 2 + (cy - y) ** 2 >= min_gap**2 for x, y in centers):
            centers.append((cx, cy))
    return centers


def blob_sample(rng: np.random.Generator, size: int = 128, n_blobs: tuple[int, int] = (3, 7),
                radius: tuple[float, float] = (10.0, 15.0), bg: float = 0.08,
                intensity: tuple[float, float] = (0.75, 0.98), noise: float = 0.015) -> BlobSample:
    n = int(rng.integers(n_blobs[0], n_blobs[1] + 1))
    centers = _place_centers(rng, size, n, radius[1], min_gap=2 * radius[1] + 14)
    blobs = []
    for cx, cy in centers:
        r = float(rng.uniform(*radius))
        a = float(rng.uniform(*intensity))
        blobs.append((cx, cy, r, a))
    image, labels = _render(size, blobs, bg, noise, rng)
    dots = [(cx, cy) for cx, cy, _, _ in blobs]
    boxes = [ExemplarBox(cx - r, cy - r, 2 * r, 2 * r) for cx, cy, r, _ in blobs]
    return BlobSample(image=image, labels=labels, dots=dots, boxes=boxes)


def moving_sequence(rng: np.random.Generator, size: int = 128, n_blobs: int = 3,
                    n_frames: int = 3, max_step: float = 5.0,
                    radius: tuple[float, float] = (10.0, 14.0), bg: float = 0.08,
                    noise: float = 0.01) -> tuple[ImageSequence, TrackingGraph, list[list[ExemplarBox]]]:
    """Constant-count drifting blobs; returns frames, the ground-truth graph
    and per-frame tight exemplar boxes."""
    centers = _place_centers(rng, size, n_blobs, radius[1], min_gap=2 * radius[1] + 18)
    radii = [float(rng.uniform(*radius)) for _ in centers]
    intensities = [float(rng.uniform(0.75, 0.98)) for _ in centers]
    velocities = [(float(rng.uniform(-max_step, max_step)), float(rng.uniform(-max_step, max_step)))
                  for _ in centers]
    frames, label_maps, boxes_per_frame = [], [], []
    margin = radius[1] + 2.0
    positions = [list(c) for c in centers]
    for _ in range(n_frames):
        blobs = [(p[0], p[1], r, a) for p, r, a in zip(positions, radii, intensities)]
        img, labels = _render(size, blobs, bg, noise, rng)
        frames.append(img)
        label_maps.append(labels)
        boxes_per_frame.append([ExemplarBox(p[0] - r, p[1] - r, 2 * r, 2 * r)
                                for p, r in zip(positions, radii)])
        for p, v in zip(positions, velocities):
            p[0] = float(np.clip(p[0] + v[0], margin, size - margin))
            p[1] = float(np.clip(p[1] + v[1], margin, size - margin))
    graph = graph_from_consistent_frames(label_maps)
    return ImageSequence(frames=frames), graph, boxes_per_frame


def _save_png(img: InputImage, path: str) -> None:
    arr = np.clip(np.round(img.pixels * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path)


def write_suite(out_dir: str, n_per_task: int = 20, size: int = 128, seed: int = 0,
                n_frames: int = 3) -> str:
    """Generate a three-task suite on disk; returns the manifest path."""
    rng = np.random.default_rng(seed)
    os.makedirs(out_dir, exist_ok=True)
    samples = []

    for kind in ("segmentation", "counting"):
        img_dir = os.path.join(out_dir, "images")
        lab_dir = os.path.join(out_dir, "labels")
        dot_dir = os.path.join(out_dir, "dots")
        for d in (img_dir, lab_dir, dot_dir):
            os.makedirs(d, exist_ok=True)
        for i in range(n_per_task):
            sample = blob_sample(rng, size=size)
            stem = f"{kind[:3]}_{i:03d}"
            image_path = os.path.join("images", f"{stem}.png")
            labels_path = os.path.join("labels", f"{stem}.tif")
            dots_path = os.path.join("dots", f"{stem}.json")
            _save_png(sample.image, os.path.join(out_dir, image_path))
            write_label_tiff(os.path.join(out_dir, labels_path), sample.labels)
            with open(os.path.join(out_dir, dots_path), "w") as fh:
                json.dump({"dots": sample.dots}, fh)
            samples.append({
                "id": stem,
                "task": kind,
                "image": image_path,
                "labels": labels_path,
                "dots": dots_path,
                "split": "train",
            })

    for i in range(n_per_task):
        seq, graph, _ = moving_sequence(rng, size=size, n_blobs=int(rng.integers(2, 5)),
                                        n_frames=n_frames)
        stem = f"trk_{i:03d}"
        seq_dir = os.path.join("sequences", stem)
        gt_dir = os.path.join("sequences", f"{stem}_GT")
        os.makedirs(os.path.join(out_dir, seq_dir), exist_ok=True)
        frame_paths = []
        for t, frame in enumerate(seq.frames):
            rel = os.path.join(seq_dir, f"t{t:03d}.png")
            _save_png(frame, os.path.join(out_dir, rel))
            frame_paths.append(rel)
        write_ctc(graph, os.path.join(out_dir, gt_dir))
        samples.append({
            "id": stem,
            "task": "tracking",
            "frames": frame_paths,
            "ctc_dir": gt_dir,
            "split": "train",
        })

    manifest = {"size": size, "seed": seed, "samples": samples}
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest_path
