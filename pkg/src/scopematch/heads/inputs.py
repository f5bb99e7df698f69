"""Assembly of head inputs from an attention bundle.

Heads consume the min-max normalized cross and self-cross maps plus every
captured image-feature scale, all resampled to the bundle grid and stacked
channel-wise.
"""

from __future__ import annotations

import numpy as np
import torch

from ..matching import AttentionBundle, minmax_normalize


def bundle_channels(bundle: AttentionBundle) -> int:
    return 2 + sum(f.shape[0] for f in bundle.image_features)


def bundle_to_tensor(bundle: AttentionBundle) -> torch.Tensor:
    """(C, h, w) float32 input tensor for the heads."""
    h, w = bundle.h, bundle.w
    planes = [
        torch.from_numpy(minmax_normalize(bundle.m_c))[None],
        torch.from_numpy(minmax_normalize(bundle.m_sc))[None],
    ]
    for feat in bundle.image_features:
        t = torch.from_numpy(np.ascontiguousarray(feat, dtype=np.float32))[None]
        if t.shape[-2:] != (h, w):
            t = torch.nn.functional.interpolate(t, size=(h, w), mode="bilinear", align_corners=False)
        planes.append(t[0])
    return torch.cat(planes, dim=0)
