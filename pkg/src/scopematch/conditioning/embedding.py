"""Conditioning embedding type and multi-exemplar averaging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyList, MixedOrigin, ShapeMismatch

ORIGIN_EXEMPLAR = "exemplar"
ORIGIN_TEMPLATE = "template"


@dataclass(frozen=True)
class ConditioningEmbedding:
    """Token embedding(s) driving the matching pass.

    ``tokens`` is (n_tokens, d_e). Exemplar-origin embeddings carry exactly one
    token; template-origin embeddings carry the encoded template sequence with
    ``content_range`` marking the actual word tokens (excluding any start/end
    markers the text encoder adds).
    """

    tokens: np.ndarray
    content_range: tuple[int, int]
    origin: str

    def __post_init__(self):
        if self.tokens.ndim != 2:
            raise ShapeMismatch(f"tokens must be (n, d), got {self.tokens.shape}")
        if not np.isfinite(self.tokens).all():
            raise ShapeMismatch("embedding contains non-finite values")
        lo, hi = self.content_range
        if not (0 <= lo < hi <= self.tokens.shape[0]):
            raise ShapeMismatch(f"content_range {self.content_range} out of bounds")
        if self.origin not in (ORIGIN_EXEMPLAR, ORIGIN_TEMPLATE):
            raise ValueError(f"unknown origin {self.origin!r}")
        if self.origin == ORIGIN_EXEMPLAR and self.tokens.shape[0] != 1:
            raise ShapeMismatch("exemplar embeddings must have exactly one token")

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]

    @property
    def n_tokens(self) -> int:
        return self.tokens.shape[0]


def exemplar_embedding(vector: np.ndarray) -> ConditioningEmbedding:
    v = np.asarray(vector, dtype=np.float32).reshape(1, -1)
    return ConditioningEmbedding(tokens=v, content_range=(0, 1), origin=ORIGIN_EXEMPLAR)


def average_embeddings(embeddings: list[ConditioningEmbedding]) -> ConditioningEmbedding:
    """Token-wise arithmetic mean of exemplar embeddings."""
    if not embeddings:
        raise EmptyList("cannot average zero embeddings")
    if any(e.origin != ORIGIN_EXEMPLAR for e in embeddings):
        raise MixedOrigin("only exemplar-origin embeddings can be averaged")
    dims = {e.dim for e in embeddings}
    if len(dims) != 1:
        raise ShapeMismatch(f"mixed embedding dims: {sorted(dims)}")
    stacked = np.stack([e.tokens[0] for e in embeddings]).astype(np.float64)
    return exemplar_embedding(stacked.mean(axis=0).astype(np.float32))
