"""Transformer blocks for the segmentation head: windowed plus global attention."""

from __future__ import annotations

import math
from functools import lru_cache

import torch
from torch import nn


@lru_cache(maxsize=16)
def sincos_position_encoding(h: int, w: int, dim: int) -> torch.Tensor:
    """Fixed 2D sine-cosine position embedding, shape (h, w, dim)."""
    assert dim % 4 == 0, "embedding dim must be divisible by 4"
    quarter = dim // 4
    omega = torch.exp(-math.log(10000.0) * torch.arange(quarter, dtype=torch.float32) / quarter)
    ys = torch.arange(h, dtype=torch.float32)[:, None] * omega[None]
    xs = torch.arange(w, dtype=torch.float32)[:, None] * omega[None]
    pe = torch.zeros(h, w, dim)
    pe[:, :, 0*quarter:1*quarter] = torch.sin(ys)[:, None, :].expand(h, w, quarter)
    pe[:, :, 1*quarter:2*quarter] = torch.cos(ys)[:, None, :].expand(h, w, quarter)
    pe[:, :, 2*quarter:3*quarter] = torch.sin(xs)[None, :, :].expand(h, w, quarter)
    pe[:, :, 3*quarter:4*quarter] = torch.cos(xs)[None, :, :].expand(h, w, quarter)
    return pe


def _window_partition(x: torch.Tensor, win: int) -> tuple[torch.Tensor, int, int]:
    """(B, H, W, D) -> (B * nWin, win*win, D) with zero padding to multiples of win."""
    b, h, w, d = x.shape
    pad_h = (win - h % win) % win
    pad_w = (win - w % win) % win
    if pad_h or pad_w:
        x = torch.nn.functional.pad(x, (0, 0, 0, pad_w, 0, pad_h))
    hp, wp = h + pad_h, w + pad_w
    x = x.reshape(b, hp // win, win, wp // win, win, d)
    x = x.permute(0, 1, 3, 2, 4, 5).reshape(-1, win * win, d)
    return x, hp, wp


def _window_merge(x: torch.Tensor, win: int, hp: int, wp: int, h: int, w: int, b: int) -> torch.Tensor:
    x = x.reshape(b, hp // win, wp // win, win, win, -1)
    x = x.permute(0, 1, 3, 2, 4, 5).reshape(b, hp, wp, -1)
    return x[:, :h, :w]


class AttentionBlock(nn.Module):
    """Pre-norm transformer block; attention is windowed unless window is None."""

    def __init__(self, dim: int, n_heads: int, window: int | None, mlp_ratio: float = 2.0):
        super().__init__()
        self.window = window
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, n_heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        hidden = int(dim * mlp_ratio)
        self.mlp = nn.Sequential(nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:  # (B, H, W, D)
        b, h, w, d = x.shape
        shortcut = x
        y = self.norm1(x)
        if self.window is not None and (h > self.window or w > self.window):
            win = self.window
            y, hp, wp = _window_partition(y, win)
            y, _ = self.attn(y, y, y, need_weights=False)
            y = _window_merge(y, win, hp, wp, h, w, b)
        else:
            y = y.reshape(b, h * w, d)
            y, _ = self.attn(y, y, y, need_weights=False)
            y = y.reshape(b, h, w, d)
        x = shortcut + y
        return x + self.mlp(self.norm2(x))
