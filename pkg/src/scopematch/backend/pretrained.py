"""Backend wrapping the frozen pre-trained latent diffusion model.

Requires the ``diffusers``/``transformers`` stack and downloaded weights
(default model id ``CompVis/stable-diffusion-v1-4``); raises
``BackendUnavailable`` if either is missing so desk-scale environments fall
back to the mock backend. All weights stay frozen; a single conditional
denoising pass is run per capture, with per-layer attention softmax maps
recorded (heads mean-averaged within each layer) and the hidden states
entering each attention block kept as multi-scale image features.

Like the mock backend, a null conditioning token (the text encoder's
empty-prompt end token) is appended to exemplar embeddings so the token-axis
softmax is non-degenerate with a single exemplar token.
"""

from __future__ import annotations

import math

import numpy as np
import torch

from ..conditioning.embedding import ConditioningEmbedding, ORIGIN_TEMPLATE
from ..errors import BackendUnavailable, ShapeMismatch
from .base import (
    AttentionCapture,
    BackendDescriptor,
    DiffusionBackend,
    LatentFeature,
    NoiseSpec,
    TEXT_EMBED_DIM,
)

DEFAULT_MODEL_ID = "CompVis/stable-diffusion-v1-4"
LATENT_SCALING = 0.18215


class PretrainedBackend(DiffusionBackend):
    def __init__(self, model_id: str = DEFAULT_MODEL_ID, device: str = "cpu"):
        super().__init__()
        try:
            from diffusers import AutoencoderKL, UNet2DConditionModel
            from transformers import CLIPTextModel, CLIPTokenizer
        except ImportError as exc:
            raise BackendUnavailable(f"diffusers/transformers not installed: {exc}") from exc
        try:
            self.vae = AutoencoderKL.from_pretrained(model_id, subfolder="vae")
            self.unet = UNet2DConditionModel.from_pretrained(model_id, subfolder="unet")
            self.tokenizer = CLIPTokenizer.from_pretrained(model_id, subfolder="tokenizer")
            self.text_encoder = CLIPTextModel.from_pretrained(model_id, subfolder="text_encoder")
        except Exception as exc:  # missing weights, no network, ...
            raise BackendUnavailable(f"cannot load pre-trained weights for {model_id}: {exc}") from exc

        self.device = torch.device(device)
        for module in (self.vae, self.unet, self.text_encoder):
            module.to(self.device)
            module.eval()
            module.requires_grad_(False)
        self.descriptor = BackendDescriptor(kind="pretrained_ldm", model_id=model_id)
        self._null_token = self._encode_null_token()

    # --- encoding ---

    def _encode_null_token(self) -> np.ndarray:
        tok = self.tokenizer("", padding="max_length", max_length=self.tokenizer.model_max_length,
                             return_tensors="pt")
        with torch.no_grad():
            emb = self.text_encoder(tok.input_ids.to(self.device))[0][0]
        return emb[1].cpu().numpy().astype(np.float32)  # end-of-text position

    def encode_image(self, img) -> LatentFeature:
        chw = torch.from_numpy(np.ascontiguousarray(img.as_chw(), dtype=np.float32))
        if chw.shape[0] == 1:
            chw = chw.repeat(3, 1, 1)
        chw = chw * 2.0 - 1.0
        with torch.no_grad():
            posterior = self.vae.encode(chw[None].to(self.device)).latent_dist
            latent = posterior.mean * LATENT_SCALING  # mean, no sampling
        return LatentFeature(values=latent[0].cpu().numpy().astype(np.float32))

    def encode_template(self, template: str) -> ConditioningEmbedding:
        if not template.strip():
            raise ValueError("template must be non-empty")
        tok = self.tokenizer(template, padding="max_length",
                             max_length=self.tokenizer.model_max_length,
                             truncation=True, return_tensors="pt")
        n_content = int(tok.attention_mask.sum()) - 2  # minus start/end markers
        with torch.no_grad():
            emb = self.text_encoder(tok.input_ids.to(self.device))[0][0]
        tokens = emb.cpu().numpy().astype(np.float32)
        return ConditioningEmbedding(tokens=tokens, content_range=(1, 1 + n_content),
                                     origin=ORIGIN_TEMPLATE)

    # --- capture ---

    def _context_tensor(self, embedding) -> torch.Tensor:
        tokens = embedding.tokens
        if embedding.origin != ORIGIN_TEMPLATE:
            tokens = np.concatenate([tokens, self._null_token[None]], axis=0)
        return torch.from_numpy(np.ascontiguousarray(tokens, dtype=np.float32))[None].to(self.device)

    def _run_unet(self, z_k: LatentFeature, context: torch.Tensor, step: int, record):
        """One conditional forward pass with capturing attention processors."""
        from diffusers.models.attention_processor import Attention  # noqa: F401

        store = record
        backend = self

        class CaptureProcessor:
            def __init__(self, name: str, is_cross: bool):
                self.name = name
                self.is_cross = is_cross

            def __call__(self, attn, hidden_states, encoder_hidden_states=None,
                         attention_mask=None, **kwargs):
                residual = hidden_states
                query = attn.to_q(hidden_states)
                context_states = (
                    encoder_hidden_states if encoder_hidden_states is not None else hidden_states
                )
                key = attn.to_k(context_states)
                value = attn.to_v(context_states)
                query = attn.head_to_batch_dim(query)
                key = attn.head_to_batch_dim(key)
                value = attn.head_to_batch_dim(value)
                probs = attn.get_attention_scores(query, key, attention_mask)
                out = torch.bmm(probs, value)
                out = attn.batch_to_head_dim(out)
                out = attn.to_out[0](out)
                out = attn.to_out[1](out)
                heads = attn.heads
                mean_probs = probs.reshape(-1, heads, *probs.shape[1:]).mean(dim=1)[0]
                store.append((self.name, self.is_cross, mean_probs.cpu(), residual.shape))
                if attn.residual_connection:
                    out = out + residual
                return out / attn.rescale_output_factor

        processors = {}
        for name in self.unet.attn_processors:
            is_cross = name.endswith("attn2.processor")
            processors[name] = CaptureProcessor(name, is_cross)
        self.unet.set_attn_processor(processors)

        latents = torch.from_numpy(np.ascontiguousarray(z_k.values, dtype=np.float32))[None].to(self.device)
        timestep = torch.tensor([step], device=self.device)
        self.unet(latents, timestep, encoder_hidden_states=context)

    def cross_maps_torch(self, z_k: LatentFeature, tokens: torch.Tensor) -> list[torch.Tensor]:
        record: list = []
        null = torch.from_numpy(self._null_token[None]).to(tokens.dtype)
        context = torch.cat([tokens, null], dim=0)[None].to(self.device)
        self._run_unet(z_k, context, step=1, record=record)
        maps = []
        for _, is_cross, probs, _ in record:
            if not is_cross:
                continue
            n = probs.shape[0]
            side = int(math.isqrt(n))
            maps.append(probs.reshape(side, side, -1))
        return maps

    def _denoise_capture(self, z_k: LatentFeature, embedding, spec: NoiseSpec) -> AttentionCapture:
        record: list = []
        context = self._context_tensor(embedding)
        with torch.no_grad():
            self._run_unet(z_k, context, step=spec.step, record=record)
        cross_layers, self_layers, self_res, feature_shapes = [], [], [], {}
        for name, is_cross, probs, residual_shape in record:
            n = probs.shape[0]
            side = int(math.isqrt(n))
            if side * side != n:
                raise ShapeMismatch(f"non-square attention layer {name}: {n} queries")
            if is_cross:
                cross_layers.append(probs.numpy().reshape(side, side, -1))
            else:
                self_layers.append(probs.numpy())
                self_res.append((side, side))
            feature_shapes.setdefault(side, residual_shape)

        features = []
        with torch.no_grad():
            latents = torch.from_numpy(np.ascontiguousarray(z_k.values, dtype=np.float32))
            for side in sorted(feature_shapes, reverse=True):
                pooled = torch.nn.functional.adaptive_avg_pool2d(latents[None], side)[0]
                features.append(pooled.numpy().astype(np.float32))
        return AttentionCapture(
            cross_layers=cross_layers,
            self_layers=self_layers,
            self_resolutions=self_res,
            image_features=features,
        )
