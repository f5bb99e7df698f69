"""Attention-map reduction and the self-cross combination.

``run_matching`` executes the conditional denoising pass and condenses the
captured per-layer maps into a single cross-attention map ``M_c`` (h x w), a
self-attention map ``M_s`` (h x w x h x w) and their combination

    M_sc[a, b] = sum_p sum_q M_c[p, q] * M_s[p, q, a, b]

which propagates exemplar/template evidence through within-image
associations. Default layer selection keeps cross layers at 1/4 and 1/2 of
the latent resolution and self layers at 1/2 and 1/1 (coarse layers carry
semantics, fine layers carry boundaries); everything is resampled to the
latent grid and averaged. Heads receive min-max normalized maps; the bundle
itself stores the raw combination so it stays recomputable from M_c and M_s.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .backend.base import AttentionCapture, DiffusionBackend, NoiseSpec
from .conditioning.embedding import ConditioningEmbedding
from .core.config import RunConfig
from .core.image import InputImage
from .core.io import write_float_tiff
from .errors import NoCrossLayers, NoSelfLayers, ShapeMismatch


@dataclass(frozen=True)
class MatchingConfig:
    """Which attention layers feed the averaged maps, as latent-size divisors."""

    cross_scales: tuple[int, ...] = (4, 2)
    self_scales: tuple[int, ...] = (2, 1)


DEFAULT_MATCHING = MatchingConfig()


@dataclass
class AttentionBundle:
    m_c: np.ndarray  # (h, w)
    m_s: np.ndarray  # (h, w, h, w)
    m_sc: np.ndarray  # (h, w), raw combination of m_c and m_s
    image_features: list[np.ndarray] = field(default_factory=list)

    @property
    def h(self) -> int:
        return self.m_c.shape[0]

    @property
    def w(self) -> int:
        return self.m_c.shape[1]


def minmax_normalize(m: np.ndarray) -> np.ndarray:
    lo, hi = float(m.min()), float(m.max())
    if hi > lo:
        return ((m - lo) / (hi - lo)).astype(np.float32)
    return np.zeros_like(m, dtype=np.float32)


def _resample2d(m: torch.Tensor, size: tuple[int, int]) -> torch.Tensor:
    if tuple(m.shape[-2:]) == size:
        return m
    return torch.nn.functional.interpolate(
        m[None, None], size=size, mode="bilinear", align_corners=False
    )[0, 0]


def _select_layers(resolutions: list[tuple[int, int]], target: int, scales: tuple[int, ...]) -> list[int]:
    wanted = {max(1, target // s) for s in scales}
    chosen = [i for i, (h, _) in enumerate(resolutions) if h in wanted]
    return chosen if chosen else list(range(len(resolutions)))


def reduce_cross_torch(
    layers: list[torch.Tensor],
    content_range: tuple[int, int],
    target: int,
    config: MatchingConfig = DEFAULT_MATCHING,
) -> torch.Tensor:
    """Differentiable cross-map reduction used by both capture and training paths."""
    if not layers:
        raise NoCrossLayers("capture contains no cross-attention layers")
    resolutions = [(int(m.shape[0]), int(m.shape[1])) for m in layers]
    chosen = _select_layers(resolutions, target, config.cross_scales)
    lo, hi = content_range
    resampled = []
    for i in chosen:
        sliced = layers[i][:, :, lo:hi].mean(dim=2)
        resampled.append(_resample2d(sliced, (target, target)))
    return torch.stack(resampled).mean(dim=0)


def reduce_cross(
    capture: AttentionCapture,
    embedding: ConditioningEmbedding,
    target: int | None = None,
    config: MatchingConfig = DEFAULT_MATCHING,
) -> np.ndarray:
    """Average the selected cross layers' content-token slices into M_c."""
    if not capture.cross_layers:
        raise NoCrossLayers("capture contains no cross-attention layers")
    if target is None:
        target = max(h for h, _ in capture.cross_resolutions)
    with torch.no_grad():
        layers = [torch.from_numpy(np.ascontiguousarray(m, dtype=np.float32)) for m in capture.cross_layers]
        out = reduce_cross_torch(layers, embedding.content_range, target, config)
    return out.numpy().astype(np.float32)


def reduce_self(
    capture: AttentionCapture,
    target: int | None = None,
    config: MatchingConfig = DEFAULT_MATCHING,
) -> np.ndarray:
    """Average the selected self layers into M_s at (target, target, target, target)."""
    if not capture.self_layers:
        raise NoSelfLayers("capture contains no self-attention layers")
    if target is None:
        target = max(h for h, _ in capture.self_resolutions)
    chosen = _select_layers(capture.self_resolutions, target, config.self_scales)
    acc = None
    with torch.no_grad():
        for i in chosen:
            h, w = capture.self_resolutions[i]
            m = torch.from_numpy(np.ascontiguousarray(capture.self_layers[i], dtype=np.float32))
            m = m.reshape(h, w, h, w)
            if (h, w) != (target, target):
                # resample key space, then query space
                m = torch.nn.functional.interpolate(
                    m.reshape(h * w, 1, h, w), size=(target, target),
                    mode="bilinear", align_corners=False,
                ).reshape(h, w, target, target)
                m = torch.nn.functional.interpolate(
                    m.permute(2, 3, 0, 1).reshape(target * target, 1, h, w),
                    size=(target, target), mode="bilinear", align_corners=False,
                ).reshape(target, target, target, target).permute(2, 3, 0, 1)
            acc = m if acc is None else acc + m
        out = acc / len(chosen)
    return out.numpy().astype(np.float32)


def self_cross(m_c: np.ndarray, m_s: np.ndarray) -> np.ndarray:
    """Propagate cross evidence through self associations (float64 accumulation)."""
    if m_s.ndim != 4 or m_c.shape != m_s.shape[:2] or m_s.shape[:2] != m_s.shape[2:]:
        raise ShapeMismatch(f"incompatible shapes M_c {m_c.shape}, M_s {m_s.shape}")
    return np.einsum("pq,pqab->ab", m_c.astype(np.float64), m_s.astype(np.float64))


def bundle_from_capture(
    capture: AttentionCapture,
    embedding: ConditioningEmbedding,
    target: int,
    config: MatchingConfig = DEFAULT_MATCHING,
) -> AttentionBundle:
    m_c = reduce_cross(capture, embedding, target, config)
    m_s = reduce_self(capture, target, config)
    m_sc = self_cross(m_c, m_s).astype(np.float32)
    return AttentionBundle(m_c=m_c, m_s=m_s, m_sc=m_sc, image_features=list(capture.image_features))


def run_matching(
    img: InputImage,
    embedding: ConditioningEmbedding,
    cfg: RunConfig,
    backend: DiffusionBackend,
    config: MatchingConfig = DEFAULT_MATCHING,
) -> AttentionBundle:
    """Full matching pass on an already-resized image."""
    z = backend.encode_image(img)
    spec = NoiseSpec(step=cfg.noise_step, seed=cfg.rng_seed)
    z_k = backend.add_noise(z, spec)
    capture = backend.denoise_with_capture(z_k, embedding, spec)
    return bundle_from_capture(capture, embedding, target=z.h, config=config)


def cross_map_only(
    img: InputImage,
    embedding: ConditioningEmbedding,
    cfg: RunConfig,
    backend: DiffusionBackend,
    config: MatchingConfig = DEFAULT_MATCHING,
) -> np.ndarray:
    """M_c alone (no self-cross), used by cross-frame object matching."""
    z = backend.encode_image(img)
    spec = NoiseSpec(step=cfg.noise_step, seed=cfg.rng_seed)
    z_k = backend.add_noise(z, spec)
    capture = backend.denoise_with_capture(z_k, embedding, spec)
    return reduce_cross(capture, embedding, target=z.h, config=config)


def export_debug_maps(bundle: AttentionBundle, out_dir: str, prefix: str = "attention") -> list[str]:
    """Write M_c / M_sc as float TIFFs (the UI's attention-overlay source)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, arr in (("cross", bundle.m_c), ("selfcross", minmax_normalize(bundle.m_sc))):
        path = os.path.join(out_dir, f"{prefix}_{name}.tif")
        write_float_tiff(path, arr)
        paths.append(path)
    return paths
