"""Segmentation head: fused attention maps -> per-instance label map.

Architecture: normalization + fusion convolution, a windowed transformer
encoder with four global-attention blocks interleaved, then two prediction
convolutions emitting three channels (foreground, boundary, background).
Instances are recovered as 4-connected components of foreground minus
boundary, with boundary pixels reassigned to the nearest component.
"""

from __future__ import annotations

import numpy as np
import torch
from scipy import ndimage
from torch import nn

from ..core.geometry import ResizePlan
from ..errors import UntrainedState
from ..matching import AttentionBundle
from .blocks import AttentionBlock, sincos_position_encoding
from .inputs import bundle_to_tensor
from .types import FOUR_CONNECTED, InstanceLabelMap

UPSAMPLE = 8  # bundle grid -> model-input resolution


class SegmentationHead(nn.Module):
    def __init__(self, in_channels: int, dim: int = 96, depth: int = 8, n_heads: int = 4,
                 window: int = 14, n_global: int = 4):
        super().__init__()
        self.in_channels = in_channels
        self.dim = dim
        self.depth = depth
        self.n_heads = n_heads
        self.window = window
        self.n_global = n_global
        self.trained = False

        self.norm_in = nn.GroupNorm(1, in_channels)
        self.fuse = nn.Conv2d(in_channels, dim, kernel_size=3, padding=1)
        global_idx = set(np.linspace(1, depth - 1, n_global, dtype=int).tolist())
        self.blocks = nn.ModuleList(
            AttentionBlock(dim, n_heads, window=None if i in global_idx else window)
            for i in range(depth)
        )
        self.pred1 = nn.Conv2d(dim, dim, kernel_size=3, padding=1)
        self.act = nn.GELU()
        self.pred2 = nn.Conv2d(dim, 3, kernel_size=3, padding=1)

    def config(self) -> dict:
        return {"in_channels": self.in_channels, "dim": self.dim, "depth": self.depth,
                "n_heads": self.n_heads, "window": self.window, "n_global": self.n_global}

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(B, C, h, w) -> (B, 3, h, w) logits for (foreground, boundary, background)."""
        y = self.fuse(self.norm_in(x))
        y = y.permute(0, 2, 3, 1)
        y = y + sincos_position_encoding(y.shape[1], y.shape[2], self.dim).to(y.dtype)
        for block in self.blocks:
            y = block(y)
        y = y.permute(0, 3, 1, 2)
        return self.pred2(self.act(self.pred1(y)))


def instances_from_probs(fg: np.ndarray, boundary: np.ndarray,
                         fg_threshold: float = 0.5,
                         boundary_threshold: float = 0.5) -> InstanceLabelMap:
    """Connected components of (fg & ~boundary); boundary-overlap pixels are
    then attached to the nearest component so no holes appear."""
    fg_mask = fg > fg_threshold
    bnd_mask = boundary > boundary_threshold
    core = fg_mask & ~bnd_mask
    labels, n = ndimage.label(core, structure=FOUR_CONNECTED)
    reassign = fg_mask & bnd_mask
    if n > 0 and reassign.any():
        _, (iy, ix) = ndimage.distance_transform_edt(labels == 0, return_indices=True)
        labels = labels.copy()
        labels[reassign] = labels[iy[reassign], ix[reassign]]
        # nearest-core assignment can leave a label 4-disconnected; split those
        split = np.zeros_like(labels)
        next_id = 0
        for i in np.unique(labels[labels > 0]):
            comp, k = ndimage.label(labels == i, structure=FOUR_CONNECTED)
            for j in range(1, k + 1):
                next_id += 1
                split[comp == j] = next_id
        labels = split
    return InstanceLabelMap.from_labels(labels)


def segment(bundle: AttentionBundle, state: SegmentationHead,
            plan: ResizePlan | None = None,
            fg_threshold: float = 0.5, boundary_threshold: float = 0.5) -> InstanceLabelMap:
    """Predict the instance label map at model resolution (or back-projected)."""
    if not state.trained:
        raise UntrainedState("segmentation head has no trained weights loaded")
    state.eval()
    with torch.no_grad():
        logits = state(bundle_to_tensor(bundle)[None])
        logits = torch.nn.functional.interpolate(
            logits, scale_factor=UPSAMPLE, mode="bilinear", align_corners=False)
        probs = torch.sigmoid(logits)[0].numpy()
    result = instances_from_probs(probs[0], probs[1], fg_threshold, boundary_threshold)
    if plan is not None:
        return InstanceLabelMap.from_labels(plan.labels_to_original(result.labels))
    return result
