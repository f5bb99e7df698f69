"""Versioned single-file checkpoints with atomic writes and bit-exact round-trip."""

from __future__ import annotations

import os

import torch

FORMAT_VERSION = 1


def save_checkpoint(path: str, module: torch.nn.Module, kind: str, *, trained: bool,
                    extra: dict | None = None) -> None:
    _kind_class(kind)  # fail early on unknown kinds
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": module.config(),
        "trained": bool(trained),
        "state_dict": module.state_dict(),
        "extra": extra or {},
    }
    tmp = f"{path}.tmp"
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> tuple[torch.nn.Module, dict]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version} in {path}")
    kind = payload["kind"]
    cls = _kind_class(kind)
    module = cls(**payload["config"])
    module.load_state_dict(payload["state_dict"])
    module.trained = payload["trained"]
    meta = {"kind": kind, "trained": payload["trained"], "extra": payload.get("extra", {})}
    return module, meta


def _kind_class(kind: str):
    from ..conditioning.projector import ExemplarProjector
    from .counting import CountingHead
    from .linkage import LinkageHead
    from .segmentation import SegmentationHead

    classes = {
        "segmentation_head": SegmentationHead,
        "counting_head": CountingHead,
        "linkage_head": LinkageHead,
        "projector": ExemplarProjector,
    }
    if kind not in classes:
        raise ValueError(f"unknown checkpoint kind {kind!r}")
    return classes[kind]
