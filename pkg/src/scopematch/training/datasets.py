"""Dataset manifest loading.

A manifest is a JSON file with a ``samples`` list; every sample carries an
``id``, a ``task`` and a ``split``, plus task-dependent relative paths:
``image`` + ``labels`` (segmentation), ``image`` + ``dots`` (counting, with
``labels`` optional for exemplar-box derivation), ``frames`` + ``ctc_dir``
(tracking).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from ..errors import ManifestError


@dataclass(frozen=True)
class ManifestSample:
    id: str
    task: str
    split: str
    image: str | None = None
    labels: str | None = None
    dots: str | None = None
    frames: tuple[str, ...] = ()
    ctc_dir: str | None = None


@dataclass
class Manifest:
    root: str
    samples: list[ManifestSample] = field(default_factory=list)

    def select(self, task: str | None = None, split: str | None = None) -> list[ManifestSample]:
        out = self.samples
        if task is not None:
            out = [s for s in out if s.task == task]
        if split is not None:
            out = [s for s in out if s.split == split]
        return list(out)

    def path(self, rel: str) -> str:
        return os.path.join(self.root, rel)


_REQUIRED = {"id", "task", "split"}


def load_manifest(path: str) -> Manifest:
    if not os.path.isfile(path):
        raise ManifestError(f"manifest not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot parse manifest {path}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("samples"), list):
        raise ManifestError(f"manifest {path} has no 'samples' list")
    root = os.path.dirname(os.path.abspath(path))
    samples = []
    for i, raw in enumerate(data["samples"]):
        missing = _REQUIRED - set(raw)
        if missing:
            raise ManifestError(f"sample {i} missing fields {sorted(missing)}")
        task = raw["task"]
        if task not in ("segmentation", "tracking", "counting"):
            raise ManifestError(f"sample {raw['id']}: unknown task {task!r}")
        if task == "tracking" and not raw.get("frames"):
            raise ManifestError(f"sample {raw['id']}: tracking sample without frames")
        if task != "tracking" and not raw.get("image"):
            raise ManifestError(f"sample {raw['id']}: missing image path")
        samples.append(ManifestSample(
            id=str(raw["id"]),
            task=task,
            split=str(raw["split"]),
            image=raw.get("image"),
            labels=raw.get("labels"),
            dots=raw.get("dots"),
            frames=tuple(raw.get("frames") or ()),
            ctc_dir=raw.get("ctc_dir"),
        ))
    return Manifest(root=root, samples=samples)
