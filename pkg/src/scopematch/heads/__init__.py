from __future__ import annotations

import torch

from ..errors import ShapeMismatch
from ..matching import AttentionBundle
from .checkpoint import load_checkpoint, save_checkpoint
from .counting import CountingHead, count
from .inputs import bundle_channels, bundle_to_tensor
from .linkage import LinkageHead, PROPERTY_DIM
from .segmentation import SegmentationHead, instances_from_probs, segment
from .types import DensityMap, InstanceLabelMap

__all__ = [
    "AttentionBundle",
    "CountingHead",
    "DensityMap",
    "InstanceLabelMap",
    "LinkageHead",
    "PROPERTY_DIM",
    "SegmentationHead",
    "bundle_channels",
    "bundle_to_tensor",
    "count",
    "head_forward_raw",
    "instances_from_probs",
    "load_checkpoint",
    "save_checkpoint",
    "segment",
]


def head_forward_raw(bundle: AttentionBundle, state: torch.nn.Module) -> torch.Tensor:
    """Raw head output before post-processing: (3, h, w) logits for the
    segmentation head, (1, 8h, 8w) density for the counting head."""
    if not isinstance(state, (SegmentationHead, CountingHead)):
        raise ShapeMismatch(f"unsupported head type {type(state).__name__}")
    x = bundle_to_tensor(bundle)
    if x.shape[0] != state.in_channels:
        raise ShapeMismatch(f"bundle has {x.shape[0]} channels, head expects {state.in_channels}")
    return state(x[None])[0]
