"""Backend abstraction over the frozen latent diffusion model.

A backend encodes images into latent space, encodes the fixed text template,
applies forward noise, and runs a single conditional denoising pass while
capturing every cross- and self-attention softmax map (heads averaged within
each layer). Two implementations share this interface: the pre-trained model
(see ``pretrained``) and a deterministic mock for desk-scale testing
(see ``mock``). A conformance suite in the tests runs both against the same
contract.

Backends are exclusive resources: one in-flight denoising pass per instance,
enforced with a lock. Returned captures are immutable numpy data, safe to
share across threads.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import ShapeMismatch
from .scheduler import TRAIN_STEPS

TEXT_EMBED_DIM = 768
TEMPLATE_TEXT = "repetitive objects"


@dataclass(frozen=True)
class LatentFeature:
    """Latent image feature, channels x h x w."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3:
            raise ShapeMismatch(f"latent must be 3D (C,h,w), got shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ShapeMismatch("latent contains non-finite values")

    @property
    def h(self) -> int:
        return self.values.shape[1]

    @property
    def w(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class NoiseSpec:
    step: int
    seed: int

    def __post_init__(self):
        if not 0 < self.step < TRAIN_STEPS:
            from ..errors import InvalidStep

            raise InvalidStep(f"step must be in (0, {TRAIN_STEPS}), got {self.step}")


@dataclass
class AttentionCapture:
    """All attention maps and image features captured from one denoising pass.

    cross_layers[i]: (h_i, w_i, n_tokens), each row (over tokens) sums to 1.
    self_layers[i]:  (h_i * w_i, h_i * w_i), each row sums to 1.
    image_features[i]: (C_i, h_i, w_i) activations from the denoising network.
    """

    cross_layers: list[np.ndarray] = field(default_factory=list)
    self_layers: list[np.ndarray] = field(default_factory=list)
    self_resolutions: list[tuple[int, int]] = field(default_factory=list)
    image_features: list[np.ndarray] = field(default_factory=list)

    def validate(self, tol: float = 1e-4) -> None:
        for m in self.cross_layers:
            if m.ndim != 3:
                raise ShapeMismatch(f"cross layer must be (h,w,T), got {m.shape}")
            sums = m.sum(axis=2)
            if np.abs(sums - 1.0).max() > tol:
                raise ShapeMismatch("cross-attention rows do not sum to 1")
        if len(self.self_layers) != len(self.self_resolutions):
            raise ShapeMismatch("self layer/resolution bookkeeping out of sync")
        for m, (h, w) in zip(self.self_layers, self.self_resolutions):
            if m.shape != (h * w, h * w):
                raise ShapeMismatch(f"self layer shape {m.shape} does not match {h}x{w}")
            sums = m.sum(axis=1)
            if np.abs(sums - 1.0).max() > tol:
                raise ShapeMismatch("self-attention rows do not sum to 1")

    @property
    def cross_resolutions(self) -> list[tuple[int, int]]:
        return [(m.shape[0], m.shape[1]) for m in self.cross_layers]


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # "pretrained_ldm" | "mock"
    model_id: str
    text_embed_dim: int = TEXT_EMBED_DIM


class DiffusionBackend(ABC):
    """Frozen-model interface; see module docstring for the contract."""

    descriptor: BackendDescriptor

    def __init__(self):
        self._pass_lock = threading.Lock()

    @abstractmethod
    def encode_image(self, img) -> LatentFeature:
        """VAE-encode a resized square image into latent space (deterministic)."""

    @abstractmethod
    def encode_template(self, template: str):
        """Text-encode a template string into a ConditioningEmbedding."""

    @abstractmethod
    def _denoise_capture(self, z_k: LatentFeature, embedding, spec: NoiseSpec) -> AttentionCapture:
        ...

    @abstractmethod
    def cross_maps_torch(self, z_k: LatentFeature, tokens: torch.Tensor) -> list[torch.Tensor]:
        """Cross-attention maps (h,w,T+extras) per layer, differentiable w.r.t. tokens.

        Used by projector training; the capture path wraps this under no_grad.
        """

    def add_noise(self, z: LatentFeature, spec: NoiseSpec) -> LatentFeature:
        from .scheduler import noised

        return LatentFeature(values=noised(z.values, spec.step, spec.seed))

    def denoise_with_capture(self, z_k: LatentFeature, embedding, spec: NoiseSpec) -> AttentionCapture:
        if embedding.tokens.shape[1] != self.descriptor.text_embed_dim:
            raise ShapeMismatch(
                f"embedding dim {embedding.tokens.shape[1]} != backend dim {self.descriptor.text_embed_dim}"
            )
        with self._pass_lock:
            capture = self._denoise_capture(z_k, embedding, spec)
        capture.validate()
        return capture
