"""High-level analysis entry points shared by the CLI, the HTTP service and
the benchmark harness.

A ``PipelineComponents`` bundle holds the frozen backend plus the trained
heads/projector (loaded from a checkpoint directory with fixed file names).
The analyze_* functions take original-resolution inputs, run the resize ->
match -> head pipeline at the configured model edge, and return predictions
projected back to the original resolution.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .backend import DiffusionBackend, make_backend
from .conditioning import average_embeddings, project_exemplar, template_embedding
from .conditioning.projector import ExemplarProjector
from .core.config import RunConfig, TaskKind
from .core.geometry import ExemplarBox, ResizePlan, resize_with_boxes
from .core.image import ImageSequence, InputImage
from .errors import UntrainedState
from .heads import CountingHead, DensityMap, InstanceLabelMap, LinkageHead, SegmentationHead
from .heads.checkpoint import load_checkpoint
from .heads.counting import count
from .heads.segmentation import segment
from .matching import DEFAULT_MATCHING, AttentionBundle, MatchingConfig, run_matching
from .tracking import TrackingGraph, track_sequence

CHECKPOINT_FILES = {
    "segmentation_head": "seg_head.pt",
    "counting_head": "count_head.pt",
    "linkage_head": "linkage_head.pt",
    "projector": "projector.pt",
}


@dataclass
class PipelineComponents:
    backend: DiffusionBackend
    projector: ExemplarProjector | None = None
    seg_head: SegmentationHead | None = None
    count_head: CountingHead | None = None
    linkage_head: LinkageHead | None = None
    matching: MatchingConfig = DEFAULT_MATCHING

    def require(self, *names: str):
        for name in names:
            if getattr(self, name) is None:
                raise UntrainedState(f"no {name} checkpoint loaded")
        return self


def load_components(checkpoint_dir: str | None, backend_kind: str = "mock",
                    model_id: str | None = None, device: str = "cpu",
                    matching: MatchingConfig = DEFAULT_MATCHING) -> PipelineComponents:
    comps = PipelineComponents(backend=make_backend(backend_kind, model_id, device),
                               matching=matching)
    if checkpoint_dir:
        attr_by_kind = {"segmentation_head": "seg_head", "counting_head": "count_head",
                        "linkage_head": "linkage_head", "projector": "projector"}
        for kind, filename in CHECKPOINT_FILES.items():
            path = os.path.join(checkpoint_dir, filename)
            if os.path.isfile(path):
                module, _ = load_checkpoint(path)
                setattr(comps, attr_by_kind[kind], module)
    if comps.projector is None:
        # exemplar projection works untrained (analytic init); heads do not
        comps.projector = ExemplarProjector(backbone="pooled")
    return comps


def conditioning_from_boxes(img: InputImage, boxes: list[ExemplarBox],
                            comps: PipelineComponents):
    if not boxes:
        return template_embedding(comps.backend)
    embeddings = [project_exemplar(img, b, comps.projector) for b in boxes]
    return average_embeddings(embeddings)


def prepare_input(img: InputImage, boxes: list[ExemplarBox],
                  cfg: RunConfig) -> tuple[InputImage, list[ExemplarBox], ResizePlan]:
    plan = ResizePlan(orig_width=img.width, orig_height=img.height, edge=cfg.resize_edge)
    resized, mapped = resize_with_boxes(img, boxes, cfg.resize_edge)
    return resized, mapped, plan


def match_image(img: InputImage, boxes: list[ExemplarBox], cfg: RunConfig,
                comps: PipelineComponents) -> tuple[AttentionBundle, ResizePlan]:
    resized, mapped, plan = prepare_input(img, boxes, cfg)
    embedding = conditioning_from_boxes(resized, mapped, comps)
    bundle = run_matching(resized, embedding, cfg, comps.backend, config=comps.matching)
    return bundle, plan


def analyze_segmentation(img: InputImage, boxes: list[ExemplarBox], cfg: RunConfig,
                         comps: PipelineComponents) -> InstanceLabelMap:
    comps.require("seg_head")
    bundle, plan = match_image(img, boxes, cfg, comps)
    return segment(bundle, comps.seg_head, plan=plan)


def analyze_counting(img: InputImage, boxes: list[ExemplarBox], cfg: RunConfig,
                     comps: PipelineComponents) -> DensityMap:
    comps.require("count_head")
    bundle, plan = match_image(img, boxes, cfg, comps)
    return count(bundle, comps.count_head, plan=plan)


def analyze_tracking(seq: ImageSequence, boxes: list[ExemplarBox], cfg: RunConfig,
                     comps: PipelineComponents) -> TrackingGraph:
    comps.require("seg_head", "linkage_head")
    cfg_boxes = RunConfig(task=TaskKind.TRACKING, exemplar_boxes=boxes,
                          noise_step=cfg.noise_step, rng_seed=cfg.rng_seed,
                          resize_edge=cfg.resize_edge)
    return track_sequence(seq, cfg_boxes, comps.backend, comps.projector,
                          comps.seg_head, comps.linkage_head, matching=comps.matching)
