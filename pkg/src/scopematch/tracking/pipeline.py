"""Frame-by-frame tracking driver.

Frame 1 is segmented with the user's conditioning (exemplar boxes or the
fixed template); each later frame is segmented with the averaged embedding of
the previous frame's segmented objects (template fallback when a frame comes
up empty). Consecutive frames are then matched object-to-object and the
association matrices aggregated into the lineage graph.
"""

from __future__ import annotations

import numpy as np

from ..backend.base import DiffusionBackend
from ..conditioning import average_embeddings, project_exemplar, template_embedding
from ..conditioning.embedding import ConditioningEmbedding
from ..conditioning.projector import ExemplarProjector
from ..core.config import RunConfig
from ..core.geometry import ResizePlan, resize_with_boxes
from ..core.image import ImageSequence, InputImage
from ..errors import InconsistentShapes, NoObjects
from ..heads.linkage import LinkageHead
from ..heads.segmentation import SegmentationHead, segment
from ..matching import DEFAULT_MATCHING, MatchingConfig, run_matching
from .aggregate import ACCEPT_THRESHOLD, aggregate_graph
from .associate import AssociationMatrix, match_objects
from .graph import Track, TrackingGraph
from .objects import FrameObjects


def propagate_exemplar(prev: FrameObjects, prev_img: InputImage,
                       projector: ExemplarProjector) -> ConditioningEmbedding:
    """Averaged embedding of the previous frame's objects (their tight boxes)."""
    if prev.n == 0:
        raise NoObjects(f"frame {prev.frame_index} has no objects to propagate")
    embeddings = [project_exemplar(prev_img, obj.box, projector) for obj in prev.objects]
    return average_embeddings(embeddings)


def segment_frame(img: InputImage, frame_index: int, embedding: ConditioningEmbedding,
                  seg_head: SegmentationHead, cfg: RunConfig, backend: DiffusionBackend,
                  matching: MatchingConfig = DEFAULT_MATCHING) -> FrameObjects:
    bundle = run_matching(img, embedding, cfg, backend, config=matching)
    label_map = segment(bundle, seg_head)
    return FrameObjects.from_label_map(frame_index, label_map.labels, image=img)


def project_graph(graph: TrackingGraph, plan: ResizePlan) -> TrackingGraph:
    """Nearest-neighbor back-projection of the graph's masks to original size."""
    frames = [plan.labels_to_original(f) for f in graph.frames]
    for t in graph.tracks:
        for idx in range(t.begin, t.end + 1):
            if not (frames[idx] == t.label).any():
                raise InconsistentShapes(
                    f"track {t.label} vanished at frame {idx} when resampling to "
                    f"{plan.orig_width}x{plan.orig_height}; object smaller than the sampling grid"
                )
    return TrackingGraph(tracks=list(graph.tracks), frames=frames)


def track_sequence(
    seq: ImageSequence,
    cfg: RunConfig,
    backend: DiffusionBackend,
    projector: ExemplarProjector,
    seg_head: SegmentationHead,
    linkage: LinkageHead,
    matching: MatchingConfig = DEFAULT_MATCHING,
    accept_threshold: float = ACCEPT_THRESHOLD,
) -> TrackingGraph:
    template = template_embedding(backend)
    plan = ResizePlan(orig_width=seq.frames[0].width, orig_height=seq.frames[0].height,
                      edge=cfg.resize_edge)

    resized: list[InputImage] = []
    first_boxes = []
    for t, frame in enumerate(seq.frames):
        img, boxes = resize_with_boxes(frame, cfg.exemplar_boxes if t == 0 else [], cfg.resize_edge)
        resized.append(img)
        if t == 0:
            first_boxes = boxes

    if first_boxes:
        embedding = average_embeddings(
            [project_exemplar(resized[0], b, projector) for b in first_boxes])
    else:
        embedding = template

    frame_objects: list[FrameObjects] = []
    for t, img in enumerate(resized):
        if t > 0:
            prev = frame_objects[t - 1]
            if prev.n == 0:
                embedding = template  # exemplar-free fallback for empty frames
            else:
                embedding = propagate_exemplar(prev, resized[t - 1], projector)
        frame_objects.append(segment_frame(img, t, embedding, seg_head, cfg, backend, matching))

    mats: list[AssociationMatrix] = []
    for t in range(1, len(resized)):
        prev, cur = frame_objects[t - 1], frame_objects[t]
        if prev.n == 0 or cur.n == 0:
            mats.append(AssociationMatrix(values=np.zeros((prev.n, cur.n), np.float32)))
        else:
            mats.append(match_objects(resized[t - 1], prev, resized[t], cur,
                                      backend, linkage, projector, cfg, matching))

    graph = aggregate_graph(mats, frame_objects, threshold=accept_threshold)
    if (plan.orig_height, plan.orig_width) != (cfg.resize_edge, cfg.resize_edge):
        graph = project_graph(graph, plan)
    return graph
