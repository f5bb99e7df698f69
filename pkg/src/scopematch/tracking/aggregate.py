"""Greedy aggregation of per-boundary association matrices into a lineage graph.

Links are accepted in descending probability (ties broken by index) subject
to: probability at least the acceptance threshold, each target matched at
most once, each source matched at most twice. A doubly-matched source is a
division: its track ends and both targets start child tracks referencing it.
Unmatched targets start parentless tracks; unmatched sources simply end.
"""

from __future__ import annotations

import numpy as np

from ..errors import InconsistentShapes
from .associate import AssociationMatrix
from .graph import Track, TrackingGraph
from .objects import FrameObjects

ACCEPT_THRESHOLD = 0.5
MAX_CHILDREN = 2


def _accept_links(values: np.ndarray, threshold: float) -> dict[int, list[int]]:
    order = sorted(
        ((values[i, j], i, j) for i in range(values.shape[0]) for j in range(values.shape[1])),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    children: dict[int, list[int]] = {}
    taken_targets: set[int] = set()
    for p, i, j in order:
        if p < threshold:
            break
        if j in taken_targets or len(children.get(i, ())) >= MAX_CHILDREN:
            continue
        children.setdefault(i, []).append(j)
        taken_targets.add(j)
    return children


def aggregate_graph(mats: list[AssociationMatrix], frames: list[FrameObjects],
                    threshold: float = ACCEPT_THRESHOLD) -> TrackingGraph:
    if len(mats) != max(len(frames) - 1, 0):
        raise InconsistentShapes(f"{len(mats)} matrices for {len(frames)} frames")
    for t, mat in enumerate(mats):
        expected = (frames[t].n, frames[t + 1].n)
        if mat.shape != expected:
            raise InconsistentShapes(f"boundary {t}: matrix {mat.shape}, expected {expected}")

    tracks: dict[int, list[int]] = {}  # label -> [begin, end, parent]
    assignment: list[dict[int, int]] = []  # per frame: object index -> track label
    next_label = 1

    if frames:
        first = {}
        for idx in range(frames[0].n):
            tracks[next_label] = [0, 0, 0]
            first[idx] = next_label
            next_label += 1
        assignment.append(first)

    for t in range(1, len(frames)):
        children = _accept_links(mats[t - 1].values, threshold)
        target_source = {j: i for i, js in children.items() for j in js}
        current: dict[int, int] = {}
        for j in range(frames[t].n):
            i = target_source.get(j)
            if i is None:
                tracks[next_label] = [t, t, 0]
                current[j] = next_label
                next_label += 1
            elif len(children[i]) == 1:
                label = assignment[t - 1][i]
                tracks[label][1] = t
                current[j] = label
            else:  # division
                parent_label = assignment[t - 1][i]
                tracks[next_label] = [t, t, parent_label]
                current[j] = next_label
                next_label += 1
        assignment.append(current)

    label_frames = []
    for t, frame in enumerate(frames):
        out = np.zeros(frame.labels.shape, np.int32)
        for idx, obj in enumerate(frame.objects):
            out[frame.labels == obj.id] = assignment[t][idx]
        label_frames.append(out)

    graph = TrackingGraph(
        tracks=[Track(label=l, begin=b, end=e, parent=p)
                for l, (b, e, p) in sorted(tracks.items())],
        frames=label_frames,
    )
    graph.validate()
    return graph
