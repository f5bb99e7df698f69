"""Materialized training sets and component drivers for desk-scale training.

The backend is frozen and fully deterministic given the run seed, so each
sample's attention bundle (or per-object response maps) is computed once up
front and the loop trains only the lightweight component on top of it.
Exemplar-mode conditioning derives one box per image from a seeded random
ground-truth instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from scipy import ndimage

from ..backend.base import DiffusionBackend, NoiseSpec
from ..conditioning import average_embeddings, project_exemplar, template_embedding
from ..conditioning.projector import ExemplarProjector
from ..core.config import RunConfig, TaskKind
from ..core.geometry import ExemplarBox
from ..core.image import InputImage, load_image
from ..core.io import read_label_tiff
from ..errors import EmptyDataset
from ..heads import (
    CountingHead,
    InstanceLabelMap,
    LinkageHead,
    SegmentationHead,
    bundle_to_tensor,
)
from ..heads.segmentation import UPSAMPLE, segment
from ..matching import DEFAULT_MATCHING, AttentionBundle, MatchingConfig, reduce_cross_torch, run_matching
from ..metrics import CountRecord, average_precision, mae, tra_lnk
from ..tracking import (
    AssociationMatrix,
    FrameObjects,
    aggregate_graph,
    object_response_maps,
    parse_ctc,
    pooled_evidence,
)
from ..training.datasets import Manifest
from ..training.density import GTDensitySpec, make_gt_density
from ..training.loop import ComponentDriver
from ..training.losses import count_loss, link_loss, projector_loss, seg_loss
from .losses import seg_targets


def exemplar_box_from_labels(labels: np.ndarray, rng: np.random.Generator) -> ExemplarBox:
    """Tight box of a seeded random ground-truth instance."""
    ids = sorted(set(np.unique(labels).tolist()) - {0})
    if not ids:
        raise EmptyDataset("label map has no instances to derive an exemplar from")
    chosen = ids[int(rng.integers(0, len(ids)))]
    sl = ndimage.find_objects((labels == chosen).astype(np.int32))[0]
    ys, xs = sl
    return ExemplarBox(float(xs.start), float(ys.start),
                       float(xs.stop - xs.start), float(ys.stop - ys.start))


def conditioning_for(img: InputImage, labels: np.ndarray | None, mode: str,
                     backend: DiffusionBackend, projector: ExemplarProjector | None,
                     rng: np.random.Generator, n_exemplars: int = 1):
    if mode == "A":
        return template_embedding(backend), []
    if labels is None or projector is None:
        raise EmptyDataset("exemplar mode needs labels and a projector")
    boxes = [exemplar_box_from_labels(labels, rng) for _ in range(n_exemplars)]
    embeddings = [project_exemplar(img, b, projector) for b in boxes]
    return average_embeddings(embeddings), boxes


# --- segmentation ---

@dataclass
class SegSample:
    x: torch.Tensor  # head input, (C, h, w)
    bundle: AttentionBundle
    gt: InstanceLabelMap
    targets: torch.Tensor  # (3, H, W)


class SegmentationDriver(ComponentDriver):
    kind = "segmentation_head"
    higher_is_better = True

    def __init__(self, head: SegmentationHead, samples: list[SegSample],
                 val_samples: list[SegSample] | None = None):
        self.head = head
        self.samples = samples
        self.val_samples = val_samples if val_samples is not None else samples

    def module(self):
        return self.head

    def n_train(self):
        return len(self.samples)

    def train_step(self, index: int) -> torch.Tensor:
        s = self.samples[index]
        logits = self.head(s.x[None])
        logits = torch.nn.functional.interpolate(
            logits, scale_factor=UPSAMPLE, mode="bilinear", align_corners=False)[0]
        return torch.nn.functional.binary_cross_entropy_with_logits(logits, s.targets)

    def validate(self) -> float:
        scores = []
        self.head.trained = True
        for s in self.val_samples:
            pred = segment(s.bundle, self.head)
            scores.append(average_precision(pred, s.gt, thresholds=(0.5,)).ap_at[0])
        return float(np.mean(scores))


def build_seg_samples(manifest: Manifest, backend: DiffusionBackend,
                      projector: ExemplarProjector | None, mode: str, seed: int,
                      matching: MatchingConfig = DEFAULT_MATCHING,
                      split: str | None = None) -> list[SegSample]:
    rng = np.random.default_rng(seed)
    samples = []
    for entry in manifest.select(task="segmentation", split=split):
        img = load_image(manifest.path(entry.image))
        labels = read_label_tiff(manifest.path(entry.labels))
        cfg = RunConfig(task=TaskKind.SEGMENTATION, rng_seed=seed, resize_edge=img.width)
        embedding, _ = conditioning_for(img, labels, mode, backend, projector, rng)
        bundle = run_matching(img, embedding, cfg, backend, config=matching)
        gt = InstanceLabelMap.from_labels(labels)
        targets = torch.from_numpy(seg_targets(gt))
        samples.append(SegSample(x=bundle_to_tensor(bundle), bundle=bundle, gt=gt,
                                 targets=targets))
    return samples


def build_seg_samples_from_sequences(manifest: Manifest, backend: DiffusionBackend,
                                     projector: ExemplarProjector, seed: int,
                                     matching: MatchingConfig = DEFAULT_MATCHING,
                                     split: str | None = None) -> list[SegSample]:
    """Tracking frames (with their ground-truth masks) as extra segmentation
    samples, so the tracker's per-frame segmentation can be overfit too."""
    rng = np.random.default_rng(seed)
    samples = []
    for entry in manifest.select(task="tracking", split=split):
        gt_graph = parse_ctc(manifest.path(entry.ctc_dir))
        for t, rel in enumerate(entry.frames):
            img = load_image(manifest.path(rel))
            labels = gt_graph.frames[t]
            if not labels.any():
                continue
            cfg = RunConfig(task=TaskKind.SEGMENTATION, rng_seed=seed, resize_edge=img.width)
            embedding, _ = conditioning_for(img, labels, "S", backend, projector, rng)
            bundle = run_matching(img, embedding, cfg, backend, config=matching)
            gt = InstanceLabelMap.from_labels(labels)
            samples.append(SegSample(x=bundle_to_tensor(bundle), bundle=bundle, gt=gt,
                                     targets=torch.from_numpy(seg_targets(gt))))
    return samples


# --- counting ---

@dataclass
class CountSample:
    x: torch.Tensor
    bundle: AttentionBundle
    gt_density: torch.Tensor  # (H, W)
    gt_count: float


class CountingDriver(ComponentDriver):
    kind = "counting_head"
    higher_is_better = False  # MAE

    def __init__(self, head: CountingHead, samples: list[CountSample],
                 val_samples: list[CountSample] | None = None):
        self.head = head
        self.samples = samples
        self.val_samples = val_samples if val_samples is not None else samples

    def module(self):
        return self.head

    def n_train(self):
        return len(self.samples)

    def train_step(self, index: int) -> torch.Tensor:
        s = self.samples[index]
        pred = self.head.forward_preclamp(s.x[None])[0, 0]
        return count_loss(pred, s.gt_density)

    def validate(self) -> float:
        self.head.trained = True
        records = []
        with torch.no_grad():
            for s in self.val_samples:
                total = float(self.head(s.x[None]).sum())
                records.append(CountRecord(c_pred=total, c_gt=s.gt_count))
        return mae(records)


def build_count_samples(manifest: Manifest, backend: DiffusionBackend,
                        projector: ExemplarProjector | None, mode: str, seed: int,
                        density_spec: GTDensitySpec = GTDensitySpec(),
                        matching: MatchingConfig = DEFAULT_MATCHING,
                        split: str | None = None) -> list[CountSample]:
    import json

    rng = np.random.default_rng(seed)
    samples = []
    for entry in manifest.select(task="counting", split=split):
        img = load_image(manifest.path(entry.image))
        with open(manifest.path(entry.dots)) as fh:
            dots = [tuple(d) for d in json.load(fh)["dots"]]
        labels = read_label_tiff(manifest.path(entry.labels)) if entry.labels else None
        cfg = RunConfig(task=TaskKind.COUNTING, rng_seed=seed, resize_edge=img.width)
        embedding, _ = conditioning_for(img, labels, mode, backend, projector, rng)
        bundle = run_matching(img, embedding, cfg, backend, config=matching)
        density = make_gt_density(dots, (img.height, img.width), density_spec)
        samples.append(CountSample(x=bundle_to_tensor(bundle), bundle=bundle,
                                   gt_density=torch.from_numpy(density.values),
                                   gt_count=float(len(dots))))
    return samples


# --- linkage ---

@dataclass
class LinkBoundary:
    prev_maps: torch.Tensor  # (n1, 1, H, W)
    cur_maps: torch.Tensor  # (n2, 1, H, W)
    prev_props: torch.Tensor
    cur_props: torch.Tensor
    evidence: torch.Tensor  # (n1, n2)
    gt: torch.Tensor  # (n1, n2)


@dataclass
class LinkSequence:
    boundaries: list[LinkBoundary]
    frame_objects: list[FrameObjects]
    gt_graph: object  # TrackingGraph


class LinkageDriver(ComponentDriver):
    kind = "linkage_head"
    higher_is_better = True  # TRA

    def __init__(self, head: LinkageHead, sequences: list[LinkSequence]):
        self.head = head
        self.sequences = sequences
        self.flat = [b for seq in sequences for b in seq.boundaries]

    def module(self):
        return self.head

    def n_train(self):
        return len(self.flat)

    def train_step(self, index: int) -> torch.Tensor:
        b = self.flat[index]
        logits = self.head(b.prev_maps, b.prev_props, b.cur_maps, b.cur_props, b.evidence)
        return link_loss(torch.sigmoid(logits), b.gt)

    def validate(self) -> float:
        self.head.trained = True
        scores = []
        with torch.no_grad():
            for seq in self.sequences:
                mats = []
                for b in seq.boundaries:
                    logits = self.head(b.prev_maps, b.prev_props, b.cur_maps,
                                       b.cur_props, b.evidence)
                    mats.append(AssociationMatrix(
                        values=torch.sigmoid(logits).numpy().astype(np.float32)))
                pred_graph = aggregate_graph(mats, seq.frame_objects)
                tra, _ = tra_lnk(pred_graph, seq.gt_graph)
                scores.append(tra)
        return float(np.mean(scores))


def gt_association(prev: FrameObjects, cur: FrameObjects, gt_graph) -> np.ndarray:
    """1 where a previous object links (continuation or division) to a current one."""
    by_label = gt_graph.track_by_label()
    t = cur.frame_index
    out = np.zeros((prev.n, cur.n), np.float32)
    for i, po in enumerate(prev.objects):
        for j, co in enumerate(cur.objects):
            if po.id == co.id:
                out[i, j] = 1.0
            else:
                track = by_label.get(co.id)
                if track is not None and track.parent == po.id and track.begin == t:
                    out[i, j] = 1.0
    return out


def build_link_sequences(manifest: Manifest, backend: DiffusionBackend,
                         projector: ExemplarProjector, seed: int,
                         matching: MatchingConfig = DEFAULT_MATCHING,
                         split: str | None = None) -> list[LinkSequence]:
    sequences = []
    for entry in manifest.select(task="tracking", split=split):
        frames = [load_image(manifest.path(p)) for p in entry.frames]
        gt_graph = parse_ctc(manifest.path(entry.ctc_dir))
        cfg = RunConfig(task=TaskKind.TRACKING, rng_seed=seed, resize_edge=frames[0].width)
        frame_objects = [FrameObjects.from_label_map(t, gt_graph.frames[t], image=frames[t])
                         for t in range(len(frames))]
        boundaries = []
        for t in range(1, len(frames)):
            prev, cur = frame_objects[t - 1], frame_objects[t]
            if prev.n == 0 or cur.n == 0:
                continue
            fwd = object_response_maps(frames[t - 1], prev, frames[t], backend, projector,
                                       cfg, matching)
            bwd = object_response_maps(frames[t], cur, frames[t - 1], backend, projector,
                                       cfg, matching)
            evidence = pooled_evidence(fwd, cur, bwd, prev)
            boundaries.append(LinkBoundary(
                prev_maps=torch.from_numpy(np.stack(fwd)[:, None].astype(np.float32)),
                cur_maps=torch.from_numpy(np.stack(bwd)[:, None].astype(np.float32)),
                prev_props=torch.from_numpy(np.stack([prev.property_vector(o)
                                                      for o in prev.objects])),
                cur_props=torch.from_numpy(np.stack([cur.property_vector(o)
                                                     for o in cur.objects])),
                evidence=torch.from_numpy(evidence.astype(np.float32)),
                gt=torch.from_numpy(gt_association(prev, cur, gt_graph)),
            ))
        sequences.append(LinkSequence(boundaries=boundaries, frame_objects=frame_objects,
                                      gt_graph=gt_graph))
    return sequences


# --- projector ---

@dataclass
class ProjectorSample:
    image: torch.Tensor  # (1, C, H, W)
    box: torch.Tensor  # (1, 4) xyxy
    z_k: object  # LatentFeature
    gt_mask: np.ndarray  # (H, W) binary foreground
    target: int  # latent grid size


class ProjectorDriver(ComponentDriver):
    kind = "projector"
    higher_is_better = False  # supervision loss

    def __init__(self, projector: ExemplarProjector, backend: DiffusionBackend,
                 samples: list[ProjectorSample],
                 matching: MatchingConfig = DEFAULT_MATCHING):
        self.projector = projector
        self.backend = backend
        self.samples = samples
        self.matching = matching

    def module(self):
        return self.projector

    def trainable_parameters(self):
        return [p for p in self.projector.trainable_parameters() if p.requires_grad]

    def n_train(self):
        return len(self.samples)

    def _loss(self, s: ProjectorSample) -> torch.Tensor:
        tokens = self.projector(s.image, s.box)
        layers = self.backend.cross_maps_torch(s.z_k, tokens)
        m_c = reduce_cross_torch(layers, (0, 1), s.target, self.matching)
        return projector_loss(m_c, s.gt_mask)

    def train_step(self, index: int) -> torch.Tensor:
        return self._loss(self.samples[index])

    def validate(self) -> float:
        with torch.no_grad():
            return float(np.mean([float(self._loss(s)) for s in self.samples]))


def build_projector_samples(manifest: Manifest, backend: DiffusionBackend,
                            projector: ExemplarProjector, seed: int,
                            split: str | None = None) -> list[ProjectorSample]:
    rng = np.random.default_rng(seed)
    samples = []
    for entry in manifest.select(task="segmentation", split=split):
        img = load_image(manifest.path(entry.image))
        labels = read_label_tiff(manifest.path(entry.labels))
        box = exemplar_box_from_labels(labels, rng)
        snapped = projector.snap_box(box, img.width, img.height)
        spec = NoiseSpec(step=RunConfig(task=TaskKind.SEGMENTATION).noise_step, seed=seed)
        z_k = backend.add_noise(backend.encode_image(img), spec)
        samples.append(ProjectorSample(
            image=torch.from_numpy(np.ascontiguousarray(img.as_chw(), dtype=np.float32))[None],
            box=torch.tensor([[snapped.x0, snapped.y0, snapped.x1, snapped.y1]],
                             dtype=torch.float32),
            z_k=z_k,
            gt_mask=(labels > 0).astype(np.float32),
            target=z_k.h,
        ))
    return samples
