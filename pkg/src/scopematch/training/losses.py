"""Supervision losses for the trainable components.

All losses are plain pixel/entry means so they can be cross-checked against
scalar-loop oracles, and all are differentiable torch expressions when handed
tensors (numpy inputs are accepted for metric-style evaluation).
"""

from __future__ import annotations

import numpy as np
import torch
from scipy import ndimage

from ..errors import DegenerateMask, ShapeMismatch
from ..heads.types import FOUR_CONNECTED, InstanceLabelMap

LOG_EPS = 1e-7


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.from_numpy(np.ascontiguousarray(x, dtype=np.float32))


def seg_targets(gt: InstanceLabelMap) -> np.ndarray:
    """(3, H, W) float32 targets: foreground, boundary, background.

    The boundary channel is the 1-px inner morphological gradient of each
    instance (mask minus its erosion), unioned over instances.
    """
    labels = gt.labels
    fg = (labels > 0).astype(np.float32)
    boundary = np.zeros_like(fg)
    for i in range(1, gt.n_instances + 1):
        mask = labels == i
        eroded = ndimage.binary_erosion(mask, structure=FOUR_CONNECTED, border_value=0)
        boundary[mask & ~eroded] = 1.0
    bg = 1.0 - fg
    return np.stack([fg, boundary, bg])


def seg_loss(pred_logits, gt: InstanceLabelMap) -> torch.Tensor:
    """Mean binary cross-entropy over pixels and the three target channels."""
    logits = _as_tensor(pred_logits)
    targets = torch.from_numpy(seg_targets(gt)).to(logits.dtype)
    if logits.shape != targets.shape:
        raise ShapeMismatch(f"logits {tuple(logits.shape)} vs targets {tuple(targets.shape)}")
    return torch.nn.functional.binary_cross_entropy_with_logits(logits, targets)


def _density_values(x):
    from ..heads.types import DensityMap

    return x.values if isinstance(x, DensityMap) else x


def count_loss(pred, gt) -> torch.Tensor:
    """Mean squared error between density maps."""
    p = _as_tensor(_density_values(pred))
    g = _as_tensor(_density_values(gt)).to(p.dtype)
    if p.shape != g.shape:
        raise ShapeMismatch(f"density shapes differ: {tuple(p.shape)} vs {tuple(g.shape)}")
    return ((p - g) ** 2).mean()


def link_loss(pred, gt) -> torch.Tensor:
    """Mean binary cross-entropy between association matrices (probabilities)."""
    p = _as_tensor(pred).clamp(LOG_EPS, 1.0 - LOG_EPS)
    g = _as_tensor(gt).to(p.dtype)
    if p.shape != g.shape:
        raise ShapeMismatch(f"association shapes differ: {tuple(p.shape)} vs {tuple(g.shape)}")
    return -(g * torch.log(p) + (1.0 - g) * torch.log(1.0 - p)).mean()


def downsample_mask(mask: np.ndarray, target: int) -> np.ndarray:
    """Area-average a binary mask to (target, target), re-binarized at 0.5."""
    m = torch.from_numpy(np.ascontiguousarray(mask, dtype=np.float32))[None, None]
    pooled = torch.nn.functional.adaptive_avg_pool2d(m, target)[0, 0].numpy()
    return (pooled > 0.5).astype(np.float32)


def projector_loss(m_c, gt_mask: np.ndarray) -> torch.Tensor:
    """Cross-entropy between the min-max normalized cross map and the
    binarized, area-downsampled ground-truth object mask."""
    m = _as_tensor(m_c)
    target = downsample_mask(gt_mask, m.shape[-1])
    if not target.any():
        raise DegenerateMask("ground-truth mask is empty after downsampling")
    lo, hi = m.min(), m.max()
    norm = (m - lo) / (hi - lo) if bool(hi > lo) else torch.zeros_like(m)
    norm = norm.clamp(LOG_EPS, 1.0 - LOG_EPS)
    t = torch.from_numpy(target).to(norm.dtype)
    if norm.shape != t.shape:
        raise ShapeMismatch(f"map {tuple(norm.shape)} vs mask {tuple(t.shape)}")
    return -(t * torch.log(norm) + (1.0 - t) * torch.log(1.0 - norm)).mean()
