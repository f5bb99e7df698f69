from .aggregate import ACCEPT_THRESHOLD, aggregate_graph
from .associate import AssociationMatrix, match_objects, object_response_maps, pooled_evidence
from .ctc import export_trajectories, parse_ctc, write_ctc, write_trajectories
from .graph import Track, TrackingGraph, graph_from_consistent_frames
from .objects import FrameObjects, ObjectInfo
from .pipeline import project_graph, propagate_exemplar, segment_frame, track_sequence

__all__ = [
    "ACCEPT_THRESHOLD",
    "AssociationMatrix",
    "FrameObjects",
    "ObjectInfo",
    "Track",
    "TrackingGraph",
    "aggregate_graph",
    "export_trajectories",
    "graph_from_consistent_frames",
    "match_objects",
    "object_response_maps",
    "parse_ctc",
    "pooled_evidence",
    "project_graph",
    "propagate_exemplar",
    "segment_frame",
    "track_sequence",
    "write_ctc",
    "write_trajectories",
]
