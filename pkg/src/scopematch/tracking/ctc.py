"""Cell Tracking Challenge result serialization.

Layout: ``res_track.txt`` with one "L B E P" line per track (space-separated
ints, sorted by label, 0-based frame indices) next to ``maskNNN.tif`` 16-bit
label images whose pixel values are track labels. ``parse_ctc`` inverts
``write_ctc`` exactly; a JSON trajectory export serves the UI.
"""

from __future__ import annotations

import json
import os

import numpy as np
from scipy import ndimage

from ..core.io import read_label_tiff, write_label_tiff
from ..errors import InconsistentShapes
from .graph import Track, TrackingGraph

TRACK_FILE = "res_track.txt"


def _mask_name(index: int, n_frames: int) -> str:
    width = max(3, len(str(max(n_frames - 1, 0))))
    return f"mask{index:0{width}d}.tif"


def write_ctc(graph: TrackingGraph, out_dir: str) -> list[str]:
    """Write the track table and per-frame label masks; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    lines = [f"{t.label} {t.begin} {t.end} {t.parent}\n" for t in
             sorted(graph.tracks, key=lambda t: t.label)]
    track_path = os.path.join(out_dir, TRACK_FILE)
    with open(track_path, "w", newline="") as fh:
        fh.writelines(lines)
    written.append(track_path)
    for idx, frame in enumerate(graph.frames):
        path = os.path.join(out_dir, _mask_name(idx, graph.n_frames))
        write_label_tiff(path, frame)
        written.append(path)
    return written


def parse_ctc(in_dir: str) -> TrackingGraph:
    track_path = os.path.join(in_dir, TRACK_FILE)
    tracks = []
    with open(track_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise InconsistentShapes(f"malformed track line: {line!r}")
            label, begin, end, parent = (int(p) for p in parts)
            tracks.append(Track(label=label, begin=begin, end=end, parent=parent))
    mask_files = sorted(f for f in os.listdir(in_dir) if f.startswith("mask") and f.endswith(".tif"))
    frames = [read_label_tiff(os.path.join(in_dir, f)) for f in mask_files]
    return TrackingGraph(tracks=tracks, frames=frames)


def export_trajectories(graph: TrackingGraph) -> dict:
    """Per-track centroid polylines for the UI overlay."""
    out = []
    for t in sorted(graph.tracks, key=lambda t: t.label):
        points = []
        for idx in range(t.begin, t.end + 1):
            mask = graph.frames[idx] == t.label
            if not mask.any():
                continue
            cy, cx = ndimage.center_of_mass(mask)
            points.append({"t": idx, "x": round(float(cx), 3), "y": round(float(cy), 3)})
        out.append({"label": t.label, "parent": t.parent, "points": points})
    return {"tracks": out, "n_frames": graph.n_frames}


def write_trajectories(graph: TrackingGraph, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(export_trajectories(graph), fh, indent=2, sort_keys=True)
