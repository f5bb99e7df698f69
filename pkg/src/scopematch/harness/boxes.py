"""Exemplar-box imprecision taxonomy: classification and seeded generation.

A box is imprecise once its IoU with the reference box drops below 0.5; it is
then classified as a shift error (center displaced by more than 50% of the
reference width or height), a size error (area ratio off by more than 50%) or
an aspect-ratio error (width/height ratio off by more than 50%), tested in
that order. A box failing all three rules is binned by its largest deviation
relative to the 50% thresholds. ``perturb_box`` inverts the classifier by
seeded rejection sampling, with deviations drawn from (50%, 100%].
"""

from __future__ import annotations

import enum

import numpy as np

from ..core.geometry import ExemplarBox, box_iou
from ..errors import SamplingExhausted

IOU_PRECISE = 0.5
DEVIATION = 0.5  # the 50% rule shared by all three error kinds
MAX_ATTEMPTS = 1000


class BoxErrorKind(str, enum.Enum):
    NONE = "none"
    SHIFT = "shift"
    SIZE = "size"
    ASPECT_RATIO = "aspect_ratio"


def _deviations(box: ExemplarBox, gt: ExemplarBox) -> dict[str, float]:
    (bx, by), (gx, gy) = box.center, gt.center
    shift = max(abs(bx - gx) / gt.w, abs(by - gy) / gt.h)
    size = abs(box.area / gt.area - 1.0)
    aspect = abs((box.w / box.h) / (gt.w / gt.h) - 1.0)
    return {"shift": shift, "size": size, "aspect": aspect}


def classify_box(box: ExemplarBox, gt: ExemplarBox) -> BoxErrorKind:
    if box_iou(box, gt) >= IOU_PRECISE:
        return BoxErrorKind.NONE
    dev = _deviations(box, gt)
    if dev["shift"] > DEVIATION:
        return BoxErrorKind.SHIFT
    if dev["size"] > DEVIATION:
        return BoxErrorKind.SIZE
    if dev["aspect"] > DEVIATION:
        return BoxErrorKind.ASPECT_RATIO
    # imprecise but under every 50% rule: bin by the largest relative deviation
    order = {"shift": BoxErrorKind.SHIFT, "size": BoxErrorKind.SIZE,
             "aspect": BoxErrorKind.ASPECT_RATIO}
    largest = max(order, key=lambda k: dev[k])
    return order[largest]


def _candidate(gt: ExemplarBox, kind: BoxErrorKind, rng: np.random.Generator) -> ExemplarBox:
    d = float(rng.uniform(DEVIATION, 1.0))  # deviation magnitude, (50%, 100%]
    cx, cy = gt.center
    if kind == BoxErrorKind.SHIFT:
        axis = rng.integers(0, 2)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        dx = sign * d * gt.w if axis == 0 else float(rng.uniform(-0.4, 0.4)) * gt.w
        dy = sign * d * gt.h if axis == 1 else float(rng.uniform(-0.4, 0.4)) * gt.h
        return ExemplarBox(gt.x0 + dx, gt.y0 + dy, gt.w, gt.h)
    if kind == BoxErrorKind.SIZE:
        grow = rng.random() < 0.5
        ratio = 1.0 + d if grow else max(1.0 - d, 0.05)
        s = np.sqrt(ratio)
        return ExemplarBox(cx - gt.w * s / 2, cy - gt.h * s / 2, gt.w * s, gt.h * s)
    if kind == BoxErrorKind.ASPECT_RATIO:
        f = np.sqrt(1.0 + d)  # width/height ratio changes by factor f^2
        if rng.random() < 0.5:
            f = 1.0 / f
        # keep area fixed; jitter the center below the shift rule to push IoU
        # under 0.5 without tripping the shift or size classifications
        jx = float(rng.uniform(0.25, 0.45)) * gt.w * (1 if rng.random() < 0.5 else -1)
        jy = float(rng.uniform(0.25, 0.45)) * gt.h * (1 if rng.random() < 0.5 else -1)
        w, h = gt.w * f, gt.h / f
        return ExemplarBox(cx + jx - w / 2, cy + jy - h / 2, w, h)
    raise ValueError(f"cannot perturb with kind {kind}")


def perturb_box(gt: ExemplarBox, kind: BoxErrorKind, seed: int) -> ExemplarBox:
    """Sample a box whose classification against ``gt`` is exactly ``kind``."""
    if kind == BoxErrorKind.NONE:
        raise ValueError("perturbation kind must be an error kind")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        candidate = _candidate(gt, kind, rng)
        if classify_box(candidate, gt) == kind:
            return candidate
    raise SamplingExhausted(f"no {kind.value} perturbation found in {MAX_ATTEMPTS} attempts")
