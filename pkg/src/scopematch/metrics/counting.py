"""Counting error metrics over (predicted, ground-truth) count pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import EmptyList

RMSE_CONVENTIONAL = "conventional"
RMSE_PAPER_LITERAL = "paper_literal"


@dataclass(frozen=True)
class CountRecord:
    c_pred: float
    c_gt: float

    def __post_init__(self):
        if self.c_gt < 0:
            raise ValueError(f"ground-truth count must be non-negative, got {self.c_gt}")


def mae(records: list[CountRecord]) -> float:
    if not records:
        raise EmptyList("no count records")
    return sum(abs(r.c_pred - r.c_gt) for r in records) / len(records)


def rmse(records: list[CountRecord], variant: str = RMSE_CONVENTIONAL) -> float:
    """Root mean square error.

    ``conventional`` is sqrt(mean(squared error)); ``paper_literal`` divides the
    root of the squared-error sum by N instead (an alternative normalization
    seen in print), kept selectable so reports can state which one they used.
    """
    if not records:
        raise EmptyList("no count records")
    sq = sum((r.c_pred - r.c_gt) ** 2 for r in records)
    n = len(records)
    if variant == RMSE_CONVENTIONAL:
        return math.sqrt(sq / n)
    if variant == RMSE_PAPER_LITERAL:
        return math.sqrt(sq) / n
    raise ValueError(f"unknown RMSE variant {variant!r}")
