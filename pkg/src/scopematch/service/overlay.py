"""Result visualizations: instance overlays, trajectory plots, density heatmaps.

Colors are drawn from a seeded generator so reruns of the same job render
identically; all PNG encoding goes through PIL with default (deterministic)
settings.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from ..core.image import InputImage
from ..tracking.graph import TrackingGraph

ALPHA = 0.5


def _rgb_base(img: InputImage) -> np.ndarray:
    px = img.pixels
    if px.ndim == 2:
        px = np.stack([px] * 3, axis=-1)
    return (px * 255.0).astype(np.uint8)


def _label_colors(labels: list[int], seed: int) -> dict[int, np.ndarray]:
    rng = np.random.default_rng(seed)
    return {l: rng.integers(60, 256, size=3).astype(np.uint8) for l in sorted(labels)}


def instance_overlay(img: InputImage, labels: np.ndarray, seed: int) -> Image.Image:
    base = _rgb_base(img).astype(np.float32)
    ids = sorted(set(np.unique(labels).tolist()) - {0})
    colors = _label_colors(ids, seed)
    for i in ids:
        mask = labels == i
        base[mask] = (1 - ALPHA) * base[mask] + ALPHA * colors[i].astype(np.float32)
    return Image.fromarray(base.clip(0, 255).astype(np.uint8))


def density_heatmap(density: np.ndarray) -> Image.Image:
    lo, hi = float(density.min()), float(density.max())
    norm = (density - lo) / (hi - lo) if hi > lo else np.zeros_like(density)
    # blue -> green -> red ramp
    r = np.clip(2 * norm - 1, 0, 1)
    g = 1 - np.abs(2 * norm - 1)
    b = np.clip(1 - 2 * norm, 0, 1)
    rgb = (np.stack([r, g, b], axis=-1) * 255).astype(np.uint8)
    return Image.fromarray(rgb)


def trajectory_overlay(img: InputImage, graph: TrackingGraph, seed: int) -> Image.Image:
    from ..tracking.ctc import export_trajectories

    pil = Image.fromarray(_rgb_base(img))
    draw = ImageDraw.Draw(pil)
    data = export_trajectories(graph)
    colors = _label_colors([t["label"] for t in data["tracks"]], seed)
    for track in data["tracks"]:
        pts = [(p["x"], p["y"]) for p in track["points"]]
        color = tuple(int(c) for c in colors[track["label"]])
        if len(pts) > 1:
            draw.line(pts, fill=color, width=2)
        for x, y in pts:
            draw.ellipse([x - 2, y - 2, x + 2, y + 2], outline=color, width=1)
    return pil
