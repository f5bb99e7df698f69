"""Deterministic mock backend for desk-scale testing.

No pre-trained weights, no sampling; everything is a closed-form function of
the input so every downstream module can be exercised and re-derived by hand:

* latent = 8x8 average-pooled grayscale, replicated across 4 channels;
* per attention "layer" (one per spatial scale 1/1, 1/2, 1/4, 1/8 of the
  latent grid) each cell gets a 9-dim descriptor: the 3x3 neighborhood of the
  mean-centered pooled intensities (zero padded at borders);
* self-attention rows are the softmax over cells of
  ``cos(d_p, d_q) / TAU_SELF``;
* cross-attention rows are the softmax, over the token axis, of
  ``cos(L @ d_p, token_t) / TAU_CROSS`` for each conditioning token plus one
  trailing null logit fixed at 0 (the sink that absorbs background mass), so
  rows stay stochastic even with a single exemplar token. ``L`` is a fixed
  seeded 768x9 matrix with orthonormal columns lifting descriptors into the
  embedding space;
* image features are the per-scale average-pooled latent channels;
* the template encoder emits one hash-seeded unit vector per word.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch

from ..conditioning.embedding import ConditioningEmbedding, ORIGIN_TEMPLATE
from .base import (
    AttentionCapture,
    BackendDescriptor,
    DiffusionBackend,
    LatentFeature,
    NoiseSpec,
    TEXT_EMBED_DIM,
)
from .descriptors import LATENT_CHANNELS, POOL_FACTOR, cell_descriptors, lift_matrix, pool2d

SCALES = (1, 2, 4, 8)
TAU_CROSS = 0.15
TAU_SELF = 0.15


def _word_vector(word: str) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(word.encode("utf-8")).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(TEXT_EMBED_DIM)
    return (v / np.linalg.norm(v)).astype(np.float32)


class MockBackend(DiffusionBackend):
    def __init__(self, tau_cross: float = TAU_CROSS, tau_self: float = TAU_SELF):
        super().__init__()
        self.descriptor = BackendDescriptor(kind="mock", model_id="mock-pooled-cosine")
        self.tau_cross = tau_cross
        self.tau_self = tau_self

    # --- encoding ---

    def encode_image(self, img) -> LatentFeature:
        pooled = pool2d(img.grayscale(), POOL_FACTOR).astype(np.float32)
        values = np.repeat(pooled[None], LATENT_CHANNELS, axis=0)
        return LatentFeature(values=values)

    def encode_template(self, template: str) -> ConditioningEmbedding:
        words = template.split()
        if not words:
            raise ValueError("template must contain at least one word")
        tokens = np.stack([_word_vector(w) for w in words])
        return ConditioningEmbedding(tokens=tokens, content_range=(0, len(words)), origin=ORIGIN_TEMPLATE)

    # --- attention ---

    def _scale_grids(self, z_k: LatentFeature) -> list[np.ndarray]:
        gray = z_k.values.mean(axis=0)
        grids = []
        for s in SCALES:
            n_h, n_w = z_k.h // s, z_k.w // s
            if z_k.h % s or z_k.w % s or n_h < 2 or n_w < 2:
                continue
            grids.append(pool2d(gray, s))
        return grids

    def cross_maps_torch(self, z_k: LatentFeature, tokens: torch.Tensor) -> list[torch.Tensor]:
        lift = lift_matrix().to(tokens.dtype)
        tok = tokens / tokens.norm(dim=1, keepdim=True).clamp_min(1e-8)
        maps = []
        for grid in self._scale_grids(z_k):
            h, w = grid.shape
            descs = torch.from_numpy(cell_descriptors(grid)).to(tokens.dtype)
            lifted = descs @ lift.T
            lifted = lifted / lifted.norm(dim=1, keepdim=True).clamp_min(1e-8)
            scores = (lifted @ tok.T) / self.tau_cross
            scores = torch.cat([scores, torch.zeros(scores.shape[0], 1, dtype=scores.dtype)], dim=1)
            maps.append(torch.softmax(scores, dim=1).reshape(h, w, -1))
        return maps

    def _self_maps(self, z_k: LatentFeature) -> tuple[list[np.ndarray], list[tuple[int, int]]]:
        maps, resolutions = [], []
        for grid in self._scale_grids(z_k):
            h, w = grid.shape
            descs = torch.from_numpy(cell_descriptors(grid))
            d = descs / descs.norm(dim=1, keepdim=True).clamp_min(1e-8)
            sim = (d @ d.T) / self.tau_self
            maps.append(torch.softmax(sim, dim=1).numpy())
            resolutions.append((h, w))
        return maps, resolutions

    def _denoise_capture(self, z_k: LatentFeature, embedding, spec: NoiseSpec) -> AttentionCapture:
        with torch.no_grad():
            tokens = torch.from_numpy(np.ascontiguousarray(embedding.tokens, dtype=np.float32))
            cross = [m.numpy() for m in self.cross_maps_torch(z_k, tokens)]
        self_layers, self_res = self._self_maps(z_k)
        features = []
        for s in SCALES:
            if z_k.h % s or z_k.w % s or z_k.h // s < 2 or z_k.w // s < 2:
                continue
            pooled = np.stack([pool2d(c, s) for c in z_k.values]).astype(np.float32)
            features.append(pooled)
        return AttentionCapture(
            cross_layers=cross,
            self_layers=self_layers,
            self_resolutions=self_res,
            image_features=features,
        )
