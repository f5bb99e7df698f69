"""Pooled-patch descriptors shared by the mock backend and the pooled projector.

A descriptor is the 3x3 neighborhood (zero padded) of mean-centered 8x
average-pooled intensities; the fixed ``lift_matrix`` embeds these 9-dim
descriptors into the 768-dim conditioning space with orthonormal columns, so
cosine similarities are preserved.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import torch

from ..errors import ShapeMismatch
from .base import TEXT_EMBED_DIM

POOL_FACTOR = 8
LATENT_CHANNELS = 4
_LIFT_SEED = 20260809


@lru_cache(maxsize=1)
def lift_matrix() -> torch.Tensor:
    """Fixed (768, 9) lift with orthonormal columns."""
    rng = np.random.default_rng(_LIFT_SEED)
    m = rng.standard_normal((TEXT_EMBED_DIM, 9))
    q, _ = np.linalg.qr(m)
    return torch.from_numpy(np.ascontiguousarray(q[:, :9], dtype=np.float32))


def pool2d(arr: np.ndarray, factor: int) -> np.ndarray:
    h, w = arr.shape
    if h % factor or w % factor:
        raise ShapeMismatch(f"size {arr.shape} not divisible by pool factor {factor}")
    return arr.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def cell_descriptors(grid: np.ndarray) -> np.ndarray:
    """Mean-centered 3x3 neighborhoods, (h*w, 9), zero padded at borders."""
    g = grid.astype(np.float32) - np.float32(grid.mean())
    padded = np.pad(g, 1)
    h, w = g.shape
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3))
    return windows.reshape(h * w, 9).astype(np.float32)
