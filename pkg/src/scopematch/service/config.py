"""Service configuration: JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

ENV_PREFIX = "SCOPEMATCH_"


@dataclass
class ServiceConfig:
    data_dir: str = "scopematch_data"
    backend: str = "mock"
    model_id: str | None = None
    device: str = "cpu"
    checkpoint_dir: str | None = None
    port: int = 8008
    resize_edge: int = 512
    max_upload_bytes: int = 64 * 1024 * 1024
    result_ttl_seconds: float | None = None  # None keeps results indefinitely

    @classmethod
    def load(cls, path: str | None = None) -> "ServiceConfig":
        values: dict = {}
        if path:
            with open(path) as fh:
                values.update(json.load(fh))
        env_fields = {
            "data_dir": str, "backend": str, "model_id": str, "device": str,
            "checkpoint_dir": str, "port": int, "resize_edge": int,
            "max_upload_bytes": int, "result_ttl_seconds": float,
        }
        for name, cast in env_fields.items():
            raw = os.environ.get(ENV_PREFIX + name.upper())
            if raw is not None:
                values[name] = cast(raw)
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        return cls(**known)
