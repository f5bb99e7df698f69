from .base import (
    AttentionCapture,
    BackendDescriptor,
    DiffusionBackend,
    LatentFeature,
    NoiseSpec,
    TEMPLATE_TEXT,
    TEXT_EMBED_DIM,
)
from .mock import MockBackend
from .scheduler import alpha_bar, alpha_bar_table, noised

__all__ = [
    "AttentionCapture",
    "BackendDescriptor",
    "DiffusionBackend",
    "LatentFeature",
    "NoiseSpec",
    "TEMPLATE_TEXT",
    "TEXT_EMBED_DIM",
    "MockBackend",
    "alpha_bar",
    "alpha_bar_table",
    "noised",
    "make_backend",
]


def make_backend(kind: str, model_id: str | None = None, device: str = "cpu") -> DiffusionBackend:
    """Instantiate a backend by kind ("mock" or "pretrained")."""
    if kind == "mock":
        return MockBackend()
    if kind in ("pretrained", "pretrained_ldm"):
        from .pretrained import DEFAULT_MODEL_ID, PretrainedBackend

        return PretrainedBackend(model_id=model_id or DEFAULT_MODEL_ID, device=device)
    raise ValueError(f"unknown backend kind {kind!r}")
