"""Embedding encoder: exemplar projection and fixed-template conditioning."""

from __future__ import annotations

from weakref import WeakKeyDictionary

from ..backend.base import TEMPLATE_TEXT, DiffusionBackend
from .embedding import (
    ConditioningEmbedding,
    ORIGIN_EXEMPLAR,
    ORIGIN_TEMPLATE,
    average_embeddings,
    exemplar_embedding,
)
from .projector import ExemplarProjector, ROI_GRID, project_exemplar

_template_cache: "WeakKeyDictionary[DiffusionBackend, ConditioningEmbedding]" = WeakKeyDictionary()


def template_embedding(backend: DiffusionBackend) -> ConditioningEmbedding:
    """The fixed-template conditioning for automatic mode, cached per backend."""
    cached = _template_cache.get(backend)
    if cached is None:
        cached = backend.encode_template(TEMPLATE_TEXT)
        _template_cache[backend] = cached
    return cached


__all__ = [
    "ConditioningEmbedding",
    "ORIGIN_EXEMPLAR",
    "ORIGIN_TEMPLATE",
    "average_embeddings",
    "exemplar_embedding",
    "ExemplarProjector",
    "ROI_GRID",
    "project_exemplar",
    "template_embedding",
    "TEMPLATE_TEXT",
]
