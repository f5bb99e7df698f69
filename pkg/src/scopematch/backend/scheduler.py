"""Forward-noising schedule of the adopted latent diffusion model.

The noise table follows the scaled-linear variance schedule used by the
pre-trained model (beta ramping from 8.5e-4 to 1.2e-2 in sqrt space over
1000 steps). ``z_k = sqrt(abar_k) * z + sqrt(1 - abar_k) * eps`` with eps
drawn from a seeded standard normal, so noising is fully reproducible.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import InvalidStep

TRAIN_STEPS = 1000
BETA_START = 0.00085
BETA_END = 0.012


@lru_cache(maxsize=4)
def alpha_bar_table(steps: int = TRAIN_STEPS) -> np.ndarray:
    betas = np.linspace(BETA_START**0.5, BETA_END**0.5, steps, dtype=np.float64) ** 2
    return np.cumprod(1.0 - betas)


def alpha_bar(step: int, steps: int = TRAIN_STEPS) -> float:
    if not 0 < step < steps:
        raise InvalidStep(f"noise step must be in (0, {steps}), got {step}")
    return float(alpha_bar_table(steps)[step])


def noised(values: np.ndarray, step: int, seed: int, steps: int = TRAIN_STEPS) -> np.ndarray:
    abar = alpha_bar(step, steps)
    eps = np.random.default_rng(seed).standard_normal(values.shape)
    out = np.sqrt(abar) * values.astype(np.float64) + np.sqrt(1.0 - abar) * eps
    return out.astype(np.float32)
