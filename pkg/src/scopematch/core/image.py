"""Input image/sequence types and file loading.

Pixel data is kept as float32 in [0, 1]. 8-bit inputs are scaled by 1/255;
anything wider (16-bit, float) is normalized per image by min-max, since
microscopy dynamic ranges vary too much for fixed scaling. Images with more
than 3 channels are reduced to their first 3; 2-channel images get a zero
third channel appended.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import EmptyImage, UnreadableFile, UnsupportedFormat

_SUPPORTED_SUFFIXES = {".png", ".tif", ".tiff", ".jpg", ".jpeg"}


@dataclass(frozen=True)
class InputImage:
    """A normalized 2D microscopy image (single- or 3-channel)."""

    pixels: np.ndarray  # (H, W) or (H, W, 3) float32 in [0, 1]
    source_path: str | None = None

    def __post_init__(self):
        px = self.pixels
        if px.ndim not in (2, 3):
            raise EmptyImage(f"expected 2D or 3-channel pixel array, got ndim={px.ndim}")
        if px.ndim == 3 and px.shape[2] not in (1, 3):
            raise EmptyImage(f"channel count must be 1 or 3, got {px.shape[2]}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise EmptyImage(f"degenerate image shape {px.shape}")
        if not np.isfinite(px).all():
            raise EmptyImage("non-finite pixel values")
        if px.min() < 0.0 or px.max() > 1.0:
            raise EmptyImage("pixels outside [0, 1] after normalization")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]

    def as_chw(self) -> np.ndarray:
        """Pixels as (C, H, W) float32, C in {1, 3}."""
        px = self.pixels
        if px.ndim == 2:
            return px[None]
        return np.moveaxis(px, -1, 0)

    def grayscale(self) -> np.ndarray:
        """Channel-mean intensity, shape (H, W)."""
        px = self.pixels
        return px if px.ndim == 2 else px.mean(axis=2, dtype=np.float32).astype(np.float32)


@dataclass(frozen=True)
class ImageSequence:
    """An ordered list of frames sharing shape and channel count."""

    frames: list[InputImage] = field(default_factory=list)

    def __post_init__(self):
        if not self.frames:
            raise EmptyImage("sequence has no frames")
        h, w, c = self.frames[0].height, self.frames[0].width, self.frames[0].channels
        for i, f in enumerate(self.frames):
            if (f.height, f.width, f.channels) != (h, w, c):
                raise EmptyImage(
                    f"frame {i} shape {(f.height, f.width, f.channels)} differs from frame 0 {(h, w, c)}"
                )

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def length(self) -> int:
        return len(self.frames)


def normalize_pixels(raw: np.ndarray) -> np.ndarray:
    """Normalize a raw pixel array to float32 in [0, 1].

    uint8 is scaled by 1/255; wider dtypes (and floats) use per-image min-max.
    Channel handling: >3 channels keep the first 3, 2 channels are padded with
    a zero third channel, trailing singleton channel axes are squeezed.
    """
    arr = np.asarray(raw)
    if arr.size == 0:
        raise EmptyImage("image has zero pixels")
    if arr.ndim == 3 and arr.shape[2] > 3:
        arr = arr[:, :, :3]
    if arr.ndim == 3 and arr.shape[2] == 2:
        arr = np.concatenate([arr, np.zeros_like(arr[:, :, :1])], axis=2)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3):
        raise UnsupportedFormat(f"unsupported array rank {arr.ndim}")

    if arr.dtype == np.uint8:
        out = arr.astype(np.float32) / 255.0
    else:
        arr = arr.astype(np.float64)
        if not np.isfinite(arr).all():
            raise UnreadableFile("non-finite values in image data")
        lo, hi = float(arr.min()), float(arr.max())
        if hi > lo:
            out = ((arr - lo) / (hi - lo)).astype(np.float32)
        else:
            out = np.zeros(arr.shape, dtype=np.float32)
    return np.clip(out, 0.0, 1.0)


def load_image(path: str) -> InputImage:
    """Load a PNG/TIFF/JPEG image from disk and normalize it to [0, 1]."""
    if not os.path.isfile(path):
        raise UnreadableFile(f"no such file: {path}")
    suffix = os.path.splitext(path)[1].lower()
    if suffix not in _SUPPORTED_SUFFIXES:
        raise UnsupportedFormat(f"unsupported image format: {suffix or '(none)'}")
    if os.path.getsize(path) == 0:
        raise UnreadableFile(f"empty file: {path}")

    try:
        if suffix in (".tif", ".tiff"):
            import tifffile

            raw = tifffile.imread(path)
            # channel-first stacks: move a small leading axis to the back
            if raw.ndim == 3 and raw.shape[0] <= 4 and raw.shape[0] < raw.shape[2]:
                raw = np.moveaxis(raw, 0, -1)
        else:
            with Image.open(path) as im:
                raw = np.asarray(im)
    except (OSError, ValueError, UnidentifiedImageError) as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc

    return InputImage(pixels=normalize_pixels(raw), source_path=path)


def load_sequence(paths: list[str]) -> ImageSequence:
    return ImageSequence(frames=[load_image(p) for p in paths])
