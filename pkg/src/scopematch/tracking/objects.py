"""Per-frame segmented objects and their derived properties."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..core.geometry import ExemplarBox
from ..core.image import InputImage


@dataclass(frozen=True)
class ObjectInfo:
    id: int
    box: ExemplarBox  # tight AABB of the mask, pixel coordinates
    centroid: tuple[float, float]  # (x, y)
    area: int
    mean_intensity: float


@dataclass
class FrameObjects:
    frame_index: int
    labels: np.ndarray  # instance ids, 0 background
    objects: list[ObjectInfo] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.objects)

    def mask(self, obj_id: int) -> np.ndarray:
        return self.labels == obj_id

    @classmethod
    def from_label_map(cls, frame_index: int, labels: np.ndarray,
                       image: InputImage | None = None) -> "FrameObjects":
        labels = np.asarray(labels)
        ids = sorted(set(np.unique(labels).tolist()) - {0})
        gray = image.grayscale() if image is not None else None
        objects = []
        slices = ndimage.find_objects(labels, max_label=max(ids) if ids else 0)
        for i in ids:
            sl = slices[i - 1]
            if sl is None:
                continue
            ys, xs = sl
            mask = labels == i
            area = int(mask.sum())
            cy, cx = ndimage.center_of_mass(mask)
            intensity = float(gray[mask].mean()) if gray is not None else 0.0
            box = ExemplarBox(float(xs.start), float(ys.start),
                              float(xs.stop - xs.start), float(ys.stop - ys.start))
            objects.append(ObjectInfo(id=int(i), box=box, centroid=(float(cx), float(cy)),
                                      area=area, mean_intensity=intensity))
        return cls(frame_index=frame_index, labels=labels.astype(np.int32), objects=objects)

    def property_vector(self, obj: ObjectInfo) -> np.ndarray:
        """Normalized (cx, cy, w, h, mean intensity), all roughly in [0, 1]."""
        h, w = self.labels.shape
        return np.array([
            obj.centroid[0] / w,
            obj.centroid[1] / h,
            obj.box.w / w,
            obj.box.h / h,
            obj.mean_intensity,
        ], dtype=np.float32)
