"""Exemplar projector: image + box -> one 768-dim conditioning token.

Backbone choices:

* ``resnet50`` — the full-size convolutional backbone (torchvision topology,
  optionally initialized from SwAV weights when reachable, otherwise random;
  the initialization used is recorded in the state).
* ``pooled`` — a tiny fixed feature extractor mirroring the mock backend's
  descriptor grid (8x average pooling, mean-centering, 3x3 neighborhoods).
  Its receptive field is strictly local, which the conformance tests rely on,
  and its head is analytically initialized so that an untrained projector
  already emits the lifted mean descriptor of the box region — the quantity
  the mock backend's cross-attention compares against.

Both variants share the head: RoI pooling onto a fixed 7x7 grid, a 3x3
convolution and a linear layer producing the embedding. Only the head is
trainable; backbones stay frozen.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn
from torchvision.ops import roi_align

from ..backend.base import TEXT_EMBED_DIM
from ..backend.descriptors import POOL_FACTOR, lift_matrix
from ..core.geometry import ExemplarBox
from ..core.image import InputImage
from ..errors import DegenerateBox
from .embedding import ConditioningEmbedding, exemplar_embedding

ROI_GRID = 7
SWAV_URL = "https://dl.fbaipublicfiles.com/deepcluster/swav_800ep_pretrain.pth.tar"


class _PooledBackbone(nn.Module):
    """Descriptor-grid feature extractor; 9 channels at 1/8 resolution."""

    out_channels = 9
    stride = POOL_FACTOR

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        gray = x.mean(dim=1, keepdim=True)
        pooled = torch.nn.functional.avg_pool2d(gray, POOL_FACTOR)
        centered = pooled - pooled.mean(dim=(2, 3), keepdim=True)
        return torch.nn.functional.unfold(
            torch.nn.functional.pad(centered, (1, 1, 1, 1)), kernel_size=3
        ).reshape(x.shape[0], 9, pooled.shape[2], pooled.shape[3])


class _ResNet50Backbone(nn.Module):
    out_channels = 2048
    stride = 32

    def __init__(self, init: str = "random"):
        super().__init__()
        from torchvision.models import resnet50

        net = resnet50(weights=None)
        if init == "swav":
            state = torch.hub.load_state_dict_from_url(SWAV_URL, map_location="cpu")
            cleaned = {k.replace("module.", ""): v for k, v in state.items()}
            net.load_state_dict(cleaned, strict=False)
        self.stem = nn.Sequential(net.conv1, net.bn1, net.relu, net.maxpool)
        self.layers = nn.Sequential(net.layer1, net.layer2, net.layer3, net.layer4)

    def forward(self, x):
        if x.shape[1] == 1:
            x = x.repeat(1, 3, 1, 1)
        return self.layers(self.stem(x))


class ExemplarProjector(nn.Module):
    """Projector state: frozen backbone + trainable conv/linear head."""

    def __init__(self, backbone: str = "pooled", backbone_init: str = "random",
                 version: str = "1"):
        super().__init__()
        self.backbone_kind = backbone
        self.backbone_init = backbone_init
        self.version = version
        if backbone == "pooled":
            self.backbone = _PooledBackbone()
        elif backbone == "resnet50":
            self.backbone = _ResNet50Backbone(init=backbone_init)
        else:
            raise ValueError(f"unknown backbone {backbone!r}")
        c = self.backbone.out_channels
        self.head_conv = nn.Conv2d(c, c, kernel_size=3, padding=1)
        self.head_linear = nn.Linear(c * ROI_GRID * ROI_GRID, TEXT_EMBED_DIM)
        for p in self.backbone.parameters():
            p.requires_grad_(False)
        if backbone == "pooled":
            self._analytic_init()

    def _analytic_init(self):
        # conv passes each channel through; linear averages the RoI grid and
        # lifts the 9-dim mean descriptor with the mock backend's lift matrix.
        nn.init.dirac_(self.head_conv.weight)
        nn.init.zeros_(self.head_conv.bias)
        lift = lift_matrix().numpy()  # (768, 9)
        w = np.zeros((TEXT_EMBED_DIM, 9 * ROI_GRID * ROI_GRID), dtype=np.float32)
        for c in range(9):
            w[:, c * ROI_GRID * ROI_GRID:(c + 1) * ROI_GRID * ROI_GRID] = (
                lift[:, c:c + 1] / (ROI_GRID * ROI_GRID)
            )
        with torch.no_grad():
            self.head_linear.weight.copy_(torch.from_numpy(w))
            self.head_linear.bias.zero_()

    def config(self) -> dict:
        return {"backbone": self.backbone_kind, "backbone_init": self.backbone_init,
                "version": self.version}

    def trainable_parameters(self):
        return list(self.head_conv.parameters()) + list(self.head_linear.parameters())

    def snap_box(self, box: ExemplarBox, width: int, height: int) -> ExemplarBox:
        """Clip to the image and grow sub-cell boxes to the containing feature cell."""
        if not box.intersects_image(width, height):
            raise DegenerateBox(f"box {box} lies outside the {width}x{height} image")
        b = box.clipped(float(width), float(height))
        s = float(self.backbone.stride)
        if b.w < s or b.h < s:
            cx, cy = b.center
            x0 = np.floor(cx / s) * s
            y0 = np.floor(cy / s) * s
            x0 = min(max(x0, 0.0), width - s)
            y0 = min(max(y0, 0.0), height - s)
            b = ExemplarBox(float(x0), float(y0), max(b.w, s), max(b.h, s)).clipped(width, height)
        return b

    def forward(self, image: torch.Tensor, boxes: torch.Tensor) -> torch.Tensor:
        """image: (1, C, H, W); boxes: (n, 4) as x0,y0,x1,y1 in pixels -> (n, 768)."""
        feats = self.backbone(image)
        rois = torch.cat([torch.zeros(boxes.shape[0], 1, dtype=boxes.dtype), boxes], dim=1)
        pooled = roi_align(feats, rois, output_size=ROI_GRID,
                           spatial_scale=1.0 / self.backbone.stride, aligned=True)
        out = self.head_conv(pooled)
        return self.head_linear(out.flatten(1))

    @torch.no_grad()
    def embed(self, img: InputImage, boxes: list[ExemplarBox]) -> np.ndarray:
        snapped = [self.snap_box(b, img.width, img.height) for b in boxes]
        image = torch.from_numpy(np.ascontiguousarray(img.as_chw(), dtype=np.float32))[None]
        coords = torch.tensor([[b.x0, b.y0, b.x1, b.y1] for b in snapped], dtype=torch.float32)
        self.eval()
        return self.forward(image, coords).numpy().astype(np.float32)


def project_exemplar(img: InputImage, box: ExemplarBox, state: ExemplarProjector) -> ConditioningEmbedding:
    """Project one exemplar box on a (resized) image into a conditioning token."""
    return exemplar_embedding(state.embed(img, [box])[0])
