"""Lineage graph over per-frame instance masks.

A track is a maximal single-object span (label L, frames B..E, parent P with
P = 0 for track starts). Frame label maps carry track labels directly, so the
pair (frame, pixel id) resolves to exactly one track. Divisions end the
parent track and start two child tracks referencing it; merges are not
representable (lineage stays a forest-shaped DAG).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InconsistentShapes


@dataclass(frozen=True)
class Track:
    label: int
    begin: int
    end: int
    parent: int = 0

    def __post_init__(self):
        if self.label <= 0:
            raise InconsistentShapes(f"track label must be positive, got {self.label}")
        if self.begin > self.end:
            raise InconsistentShapes(f"track {self.label}: begin {self.begin} > end {self.end}")
        if self.parent < 0:
            raise InconsistentShapes(f"track {self.label}: negative parent {self.parent}")


@dataclass
class TrackingGraph:
    tracks: list[Track] = field(default_factory=list)
    frames: list[np.ndarray] = field(default_factory=list)

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def track_by_label(self) -> dict[int, Track]:
        return {t.label: t for t in self.tracks}

    def validate(self) -> None:
        by_label = self.track_by_label()
        if len(by_label) != len(self.tracks):
            raise InconsistentShapes("duplicate track labels")
        for t in self.tracks:
            if t.end >= self.n_frames:
                raise InconsistentShapes(f"track {t.label} ends at {t.end} beyond {self.n_frames} frames")
            if t.parent:
                parent = by_label.get(t.parent)
                if parent is None:
                    raise InconsistentShapes(f"track {t.label} references unknown parent {t.parent}")
                if parent.end >= t.begin:
                    raise InconsistentShapes(
                        f"track {t.label} begins at {t.begin} but parent {t.parent} ends at {parent.end}"
                    )
        for idx, frame in enumerate(self.frames):
            ids = set(np.unique(frame).tolist()) - {0}
            for i in ids:
                t = by_label.get(int(i))
                if t is None or not (t.begin <= idx <= t.end):
                    raise InconsistentShapes(f"frame {idx} contains label {i} outside any track span")
        for t in self.tracks:
            for idx in range(t.begin, t.end + 1):
                if not (self.frames[idx] == t.label).any():
                    raise InconsistentShapes(f"track {t.label} has no mask in frame {idx}")

    def vertices(self) -> list[tuple[int, int]]:
        """(frame, label) pairs, in frame then label order."""
        out = []
        for idx, frame in enumerate(self.frames):
            for i in sorted(set(np.unique(frame).tolist()) - {0}):
                out.append((idx, int(i)))
        return out

    def edges(self) -> dict[tuple[tuple[int, int], tuple[int, int]], str]:
        """Directed edges with semantics: "track" within a span, "parent" across a division."""
        by_label = self.track_by_label()
        out: dict[tuple[tuple[int, int], tuple[int, int]], str] = {}
        for t in self.tracks:
            for idx in range(t.begin, t.end):
                out[((idx, t.label), (idx + 1, t.label))] = "track"
            if t.parent:
                parent = by_label[t.parent]
                out[((parent.end, t.parent), (t.begin, t.label))] = "parent"
        return out


def graph_from_consistent_frames(frames: list[np.ndarray],
                                 parents: dict[int, int] | None = None) -> TrackingGraph:
    """Build a graph from label maps whose ids are already consistent over time.

    Each id must appear in a contiguous frame range; ``parents`` optionally
    maps child id -> parent id.
    """
    parents = parents or {}
    presence: dict[int, list[int]] = {}
    for idx, frame in enumerate(frames):
        for i in set(np.unique(frame).tolist()) - {0}:
            presence.setdefault(int(i), []).append(idx)
    tracks = []
    for label, idxs in sorted(presence.items()):
        begin, end = idxs[0], idxs[-1]
        if idxs != list(range(begin, end + 1)):
            raise InconsistentShapes(f"id {label} is absent mid-span: frames {idxs}")
        tracks.append(Track(label=label, begin=begin, end=end, parent=parents.get(label, 0)))
    graph = TrackingGraph(tracks=tracks, frames=[f.astype(np.int32) for f in frames])
    graph.validate()
    return graph
