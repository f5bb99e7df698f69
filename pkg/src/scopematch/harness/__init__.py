from .benchmark import run_benchmark, write_report
from .boxes import BoxErrorKind, classify_box, perturb_box

__all__ = ["BoxErrorKind", "classify_box", "perturb_box", "run_benchmark", "write_report"]
