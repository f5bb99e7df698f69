"""Linkage head: per-object attention maps + property vectors -> association logits.

Each object's exemplar-conditioned cross-attention map is compressed by a
normalization layer, a strided convolution and an MLP; the compressed vector
is concatenated with a low-dimensional property vector (normalized centroid,
box size, mean intensity) into an object token. An encoder-decoder
transformer contextualizes previous-frame tokens (encoder) and current-frame
tokens (decoder), and a pairwise MLP — which also sees the pooled
bidirectional attention evidence — emits the association logits.
"""

from __future__ import annotations

import torch
from torch import nn

PROPERTY_DIM = 5  # cx, cy, w, h (normalized), mean intensity


class LinkageHead(nn.Module):
    def __init__(self, dim: int = 64, attn_feat_dim: int = 32, n_heads: int = 4,
                 depth: int = 2, pool_grid: int = 4, conv_channels: int = 8):
        super().__init__()
        self.dim = dim
        self.attn_feat_dim = attn_feat_dim
        self.n_heads = n_heads
        self.depth = depth
        self.pool_grid = pool_grid
        self.conv_channels = conv_channels
        self.trained = False

        self.map_norm = nn.GroupNorm(1, 1)
        self.map_conv = nn.Conv2d(1, conv_channels, 3, stride=2, padding=1)
        self.map_mlp = nn.Sequential(
            nn.Linear(conv_channels * pool_grid * pool_grid, attn_feat_dim),
            nn.GELU(),
            nn.Linear(attn_feat_dim, attn_feat_dim),
        )
        self.tokenize = nn.Linear(attn_feat_dim + PROPERTY_DIM, dim)
        enc_layer = nn.TransformerEncoderLayer(dim, n_heads, dim * 2, dropout=0.0,
                                               batch_first=True)
        dec_layer = nn.TransformerDecoderLayer(dim, n_heads, dim * 2, dropout=0.0,
                                               batch_first=True)
        self.encoder = nn.TransformerEncoder(enc_layer, depth)
        self.decoder = nn.TransformerDecoder(dec_layer, depth)
        self.pair_mlp = nn.Sequential(
            nn.Linear(2 * dim + 1, dim), nn.GELU(), nn.Linear(dim, 1))

    def config(self) -> dict:
        return {"dim": self.dim, "attn_feat_dim": self.attn_feat_dim,
                "n_heads": self.n_heads, "depth": self.depth,
                "pool_grid": self.pool_grid, "conv_channels": self.conv_channels}

    def compress_maps(self, maps: torch.Tensor) -> torch.Tensor:
        """(n, 1, h, w) attention maps -> (n, attn_feat_dim)."""
        y = self.map_conv(self.map_norm(maps))
        y = nn.functional.adaptive_avg_pool2d(y, self.pool_grid)
        return self.map_mlp(y.flatten(1))

    def forward(self, prev_maps: torch.Tensor, prev_props: torch.Tensor,
                cur_maps: torch.Tensor, cur_props: torch.Tensor,
                evidence: torch.Tensor) -> torch.Tensor:
        """Association logits (n_prev, n_cur); ``evidence`` pools both directions."""
        prev_tok = self.tokenize(torch.cat([self.compress_maps(prev_maps), prev_props], dim=1))
        cur_tok = self.tokenize(torch.cat([self.compress_maps(cur_maps), cur_props], dim=1))
        memory = self.encoder(prev_tok[None])
        decoded = self.decoder(cur_tok[None], memory)[0]
        encoded = memory[0]
        n_prev, n_cur = encoded.shape[0], decoded.shape[0]
        pairs = torch.cat([
            encoded[:, None].expand(n_prev, n_cur, self.dim),
            decoded[None, :].expand(n_prev, n_cur, self.dim),
            evidence[:, :, None],
        ], dim=2)
        return self.pair_mlp(pairs).squeeze(2)
