"""Counting head: fused attention maps -> density map at input resolution.

Three 3x3 convolutions, each followed by Leaky ReLU and x2 bilinear
upsampling (bundle grid -> 8x = model input size), then a 1x1 convolution
with Leaky ReLU. A final non-negativity clamp keeps the density valid.
"""

from __future__ import annotations

import torch
from torch import nn

from ..core.geometry import ResizePlan
from ..errors import UntrainedState
from ..matching import AttentionBundle
from .inputs import bundle_to_tensor
from .types import DensityMap

LEAKY_SLOPE = 0.01


class CountingHead(nn.Module):
    def __init__(self, in_channels: int, mid_channels: int = 48):
        super().__init__()
        self.in_channels = in_channels
        self.mid_channels = mid_channels
        self.trained = False
        self.conv1 = nn.Conv2d(in_channels, mid_channels, 3, padding=1)
        self.conv2 = nn.Conv2d(mid_channels, mid_channels, 3, padding=1)
        self.conv3 = nn.Conv2d(mid_channels, mid_channels, 3, padding=1)
        self.final = nn.Conv2d(mid_channels, 1, 1)
        self.act = nn.LeakyReLU(LEAKY_SLOPE)
        # start the output slightly positive: an all-negative start would sit in
        # the clamp's zero-gradient region and never train
        nn.init.constant_(self.final.bias, 0.02)

    def config(self) -> dict:
        return {"in_channels": self.in_channels, "mid_channels": self.mid_channels}

    @staticmethod
    def _up(x: torch.Tensor) -> torch.Tensor:
        return nn.functional.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)

    def forward_preclamp(self, x: torch.Tensor) -> torch.Tensor:
        """Output before the non-negativity clamp; the training loss uses this
        so the clamp's zero-gradient region cannot freeze the head."""
        y = self._up(self.act(self.conv1(x)))
        y = self._up(self.act(self.conv2(y)))
        y = self._up(self.act(self.conv3(y)))
        return self.act(self.final(y))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(B, C, h, w) -> (B, 1, 8h, 8w), non-negative."""
        return self.forward_preclamp(x).clamp_min(0.0)


def count(bundle: AttentionBundle, state: CountingHead,
          plan: ResizePlan | None = None) -> DensityMap:
    """Predict the density map (back-projected to original size when a plan is given)."""
    if not state.trained:
        raise UntrainedState("counting head has no trained weights loaded")
    state.eval()
    with torch.no_grad():
        density = state(bundle_to_tensor(bundle)[None])[0, 0].numpy()
    if plan is not None:
        density = plan.density_to_original(density)
    return DensityMap(values=density)
