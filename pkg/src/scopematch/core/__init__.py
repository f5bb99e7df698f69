from .config import DEFAULT_NOISE_STEP, DEFAULT_RESIZE_EDGE, RunConfig, TaskKind
from .geometry import ExemplarBox, ResizePlan, box_iou, resize_image, resize_with_boxes
from .image import ImageSequence, InputImage, load_image, load_sequence, normalize_pixels
from .io import read_float_tiff, read_label_tiff, write_float_tiff, write_label_tiff

__all__ = [
    "DEFAULT_NOISE_STEP",
    "DEFAULT_RESIZE_EDGE",
    "RunConfig",
    "TaskKind",
    "ExemplarBox",
    "ResizePlan",
    "box_iou",
    "resize_image",
    "resize_with_boxes",
    "ImageSequence",
    "InputImage",
    "load_image",
    "load_sequence",
    "normalize_pixels",
    "read_float_tiff",
    "read_label_tiff",
    "write_float_tiff",
    "write_label_tiff",
]
