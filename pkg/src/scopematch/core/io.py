"""TIFF export helpers for label maps and float-valued maps.

Label maps go to 16-bit TIFF, float maps (densities, attention) to 32-bit
float TIFF. Writers avoid time-dependent metadata so identical arrays give
byte-identical files.
"""

from __future__ import annotations

import numpy as np
import tifffile

MAX_LABEL = np.iinfo(np.uint16).max


def write_label_tiff(path: str, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > MAX_LABEL:
        raise ValueError(f"labels out of uint16 range: [{labels.min()}, {labels.max()}]")
    tifffile.imwrite(path, labels.astype(np.uint16))


def read_label_tiff(path: str) -> np.ndarray:
    return tifffile.imread(path).astype(np.int32)


def write_float_tiff(path: str, values: np.ndarray) -> None:
    tifffile.imwrite(path, np.asarray(values, dtype=np.float32))


def read_float_tiff(path: str) -> np.ndarray:
    return tifffile.imread(path).astype(np.float32)
