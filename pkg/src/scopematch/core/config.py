"""Run-level configuration shared by the CLI, service and pipelines."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .geometry import ExemplarBox

DEFAULT_NOISE_STEP = 20
DEFAULT_RESIZE_EDGE = 512


class TaskKind(str, enum.Enum):
    SEGMENTATION = "segmentation"
    TRACKING = "tracking"
    COUNTING = "counting"


@dataclass
class RunConfig:
    """Settings for one analysis run.

    ``mode`` is "S" (exemplar boxes given) or "A" (automatic, fixed template);
    the two are mutually implied by ``exemplar_boxes`` being non-empty/empty.
    """

    task: TaskKind
    exemplar_boxes: list[ExemplarBox] = field(default_factory=list)
    noise_step: int = DEFAULT_NOISE_STEP
    rng_seed: int = 0
    resize_edge: int = DEFAULT_RESIZE_EDGE

    def __post_init__(self):
        if isinstance(self.task, str):
            self.task = TaskKind(self.task)
        if self.noise_step <= 0:
            raise ValueError(f"noise_step must be positive, got {self.noise_step}")
        if self.resize_edge <= 0:
            raise ValueError("resize_edge must be positive")

    @property
    def mode(self) -> str:
        return "S" if self.exemplar_boxes else "A"
