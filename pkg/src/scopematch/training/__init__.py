from .datasets import Manifest, ManifestSample, load_manifest
from .density import GTDensitySpec, make_gt_density
from .loop import ComponentDriver, TrainConfig, TrainResult, train_loop
from .losses import count_loss, link_loss, projector_loss, seg_loss, seg_targets
from .prep import (
    CountingDriver,
    LinkageDriver,
    ProjectorDriver,
    SegmentationDriver,
    build_count_samples,
    build_link_sequences,
    build_projector_samples,
    build_seg_samples,
    conditioning_for,
    exemplar_box_from_labels,
)

__all__ = [
    "ComponentDriver",
    "CountingDriver",
    "GTDensitySpec",
    "LinkageDriver",
    "Manifest",
    "ManifestSample",
    "ProjectorDriver",
    "SegmentationDriver",
    "TrainConfig",
    "TrainResult",
    "build_count_samples",
    "build_link_sequences",
    "build_projector_samples",
    "build_seg_samples",
    "conditioning_for",
    "count_loss",
    "exemplar_box_from_labels",
    "link_loss",
    "load_manifest",
    "make_gt_density",
    "projector_loss",
    "seg_loss",
    "seg_targets",
    "train_loop",
]
