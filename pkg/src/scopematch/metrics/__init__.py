from .counting import RMSE_CONVENTIONAL, RMSE_PAPER_LITERAL, CountRecord, mae, rmse
from .graph import aogm_costs, tra_lnk
from .instances import (
    APResult,
    DEFAULT_THRESHOLDS,
    average_precision,
    iou_matrix,
    overlap_matrix,
    seg_score,
)

__all__ = [
    "APResult",
    "CountRecord",
    "DEFAULT_THRESHOLDS",
    "RMSE_CONVENTIONAL",
    "RMSE_PAPER_LITERAL",
    "aogm_costs",
    "average_precision",
    "iou_matrix",
    "mae",
    "overlap_matrix",
    "rmse",
    "seg_score",
    "tra_lnk",
]
