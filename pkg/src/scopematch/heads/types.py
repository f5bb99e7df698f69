"""Output types of the attention post-processing heads."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ShapeMismatch

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int8)


@dataclass(frozen=True)
class InstanceLabelMap:
    """Per-pixel instance ids; 0 is background, instances are 1..n contiguous."""

    labels: np.ndarray
    n_instances: int

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "InstanceLabelMap":
        """Relabel arbitrary non-negative ids contiguously in raster-scan order."""
        labels = np.asarray(labels)
        if labels.ndim != 2:
            raise ShapeMismatch(f"label map must be 2D, got {labels.shape}")
        out = np.zeros(labels.shape, dtype=np.int32)
        mapping: dict[int, int] = {}
        flat = labels.ravel()
        order = np.nonzero(flat)[0]
        for idx in order:
            v = int(flat[idx])
            if v not in mapping:
                mapping[v] = len(mapping) + 1
        for old, new in mapping.items():
            out[labels == old] = new
        return cls(labels=out, n_instances=len(mapping))

    def validate(self) -> None:
        ids = np.unique(self.labels)
        ids = ids[ids > 0]
        if self.n_instances != len(ids):
            raise ShapeMismatch(f"n_instances={self.n_instances} but found {len(ids)} ids")
        if len(ids) and not np.array_equal(ids, np.arange(1, len(ids) + 1)):
            raise ShapeMismatch(f"ids not contiguous: {ids}")
        for i in ids:
            _, n = ndimage.label(self.labels == i, structure=FOUR_CONNECTED)
            if n != 1:
                raise ShapeMismatch(f"instance {i} splits into {n} 4-connected components")


@dataclass(frozen=True)
class DensityMap:
    """Non-negative per-pixel density whose integral is the object count."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ShapeMismatch(f"density must be 2D, got {v.shape}")
        if not np.isfinite(v).all():
            raise ShapeMismatch("density contains non-finite values")
        if v.min() < 0:
            raise ShapeMismatch("density contains negative values")

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def count(self) -> int:
        """Predicted integer count, rounding half up."""
        return int(math.floor(self.total + 0.5))
