"""Exemplar boxes and the 512x512 resize used before matching.

Boxes live in original-image pixel space. ``resize_with_boxes`` stretches
non-square images to ``edge x edge`` (per-axis scale factors) and maps boxes
along; ``ResizePlan`` carries the inverse mapping for projecting predictions
back: nearest-neighbor for label maps, bilinear with mass renormalization
for density maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import DegenerateBox
from .image import InputImage


@dataclass(frozen=True)
class ExemplarBox:
    """Axis-aligned box (top-left corner plus size) in pixel coordinates."""

    x0: float
    y0: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise DegenerateBox(f"box must have positive size, got w={self.w} h={self.h}")

    @property
    def x1(self) -> float:
        return self.x0 + self.w

    @property
    def y1(self) -> float:
        return self.y0 + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + self.w / 2.0, self.y0 + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def intersects_image(self, width: int, height: int) -> bool:
        return self.x1 > 0 and self.y1 > 0 and self.x0 < width and self.y0 < height

    def scaled(self, sx: float, sy: float) -> "ExemplarBox":
        return ExemplarBox(self.x0 * sx, self.y0 * sy, self.w * sx, self.h * sy)

    def clipped(self, width: float, height: float) -> "ExemplarBox":
        x0 = min(max(self.x0, 0.0), width - 1e-6)
        y0 = min(max(self.y0, 0.0), height - 1e-6)
        x1 = max(min(self.x1, width), x0 + 1e-6)
        y1 = max(min(self.y1, height), y0 + 1e-6)
        return ExemplarBox(x0, y0, x1 - x0, y1 - y0)


def box_iou(a: ExemplarBox, b: ExemplarBox) -> float:
    ix = max(0.0, min(a.x1, b.x1) - max(a.x0, b.x0))
    iy = max(0.0, min(a.y1, b.y1) - max(a.y0, b.y0))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class ResizePlan:
    """Forward/inverse coordinate mapping between original and model space."""

    orig_width: int
    orig_height: int
    edge: int

    @property
    def sx(self) -> float:
        return self.edge / self.orig_width

    @property
    def sy(self) -> float:
        return self.edge / self.orig_height

    def box_to_model(self, box: ExemplarBox) -> ExemplarBox:
        return box.scaled(self.sx, self.sy)

    def box_to_original(self, box: ExemplarBox) -> ExemplarBox:
        return box.scaled(1.0 / self.sx, 1.0 / self.sy)

    def labels_to_original(self, labels: np.ndarray) -> np.ndarray:
        """Nearest-neighbor resample of an integer label map back to original size."""
        if (self.orig_height, self.orig_width) == labels.shape:
            return labels
        ys = (np.arange(self.orig_height) + 0.5) * labels.shape[0] / self.orig_height - 0.5
        xs = (np.arange(self.orig_width) + 0.5) * labels.shape[1] / self.orig_width - 0.5
        yi = np.clip(np.rint(ys).astype(int), 0, labels.shape[0] - 1)
        xi = np.clip(np.rint(xs).astype(int), 0, labels.shape[1] - 1)
        return labels[np.ix_(yi, xi)]

    def density_to_original(self, density: np.ndarray) -> np.ndarray:
        """Bilinear resample of a density map with total mass kept fixed."""
        if (self.orig_height, self.orig_width) == density.shape:
            return density
        total = float(density.sum())
        t = torch.from_numpy(np.ascontiguousarray(density, dtype=np.float32))[None, None]
        out = torch.nn.functional.interpolate(
            t, size=(self.orig_height, self.orig_width), mode="bilinear", align_corners=False
        )[0, 0].numpy()
        out = np.clip(out, 0.0, None)
        s = float(out.sum())
        if s > 0 and total > 0:
            out *= total / s
        return out


def resize_image(img: InputImage, edge: int) -> InputImage:
    """Bilinear resample to ``edge x edge``."""
    if edge <= 0:
        raise ValueError("edge must be positive")
    if img.height == edge and img.width == edge:
        return img
    chw = torch.from_numpy(np.ascontiguousarray(img.as_chw()))[None]
    out = torch.nn.functional.interpolate(chw, size=(edge, edge), mode="bilinear", align_corners=False)[0]
    pixels = out.numpy()
    pixels = pixels[0] if pixels.shape[0] == 1 else np.moveaxis(pixels, 0, -1)
    return InputImage(pixels=np.clip(pixels, 0.0, 1.0), source_path=img.source_path)


def resize_with_boxes(
    img: InputImage, boxes: list[ExemplarBox], edge: int
) -> tuple[InputImage, list[ExemplarBox]]:
    """Resize an image to ``edge x edge`` and map exemplar boxes along with it."""
    plan = ResizePlan(orig_width=img.width, orig_height=img.height, edge=edge)
    return resize_image(img, edge), [plan.box_to_model(b) for b in boxes]
