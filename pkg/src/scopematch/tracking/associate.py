"""Cross-frame object matching via exemplar-conditioned cross-attention.

Every object in one frame is projected to an exemplar embedding and matched
against the other frame, using cross-attention only (object-to-region
correspondence needs no recurring-pattern discovery). Matching runs in both
directions; each pair's evidence is the mean of the forward map pooled over
the candidate's mask and the symmetric backward value. The linkage head turns
per-object maps, property vectors and pooled evidence into association
probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..backend.base import DiffusionBackend
from ..conditioning import project_exemplar
from ..conditioning.projector import ExemplarProjector
from ..core.config import RunConfig
from ..core.image import InputImage
from ..errors import EmptyFrame, ShapeMismatch, UntrainedState
from ..heads.linkage import LinkageHead
from ..matching import DEFAULT_MATCHING, MatchingConfig, cross_map_only
from .objects import FrameObjects


@dataclass(frozen=True)
class AssociationMatrix:
    """Link probabilities, previous-frame objects x current-frame objects."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ShapeMismatch(f"association matrix must be 2D, got {v.shape}")
        if v.size and (not np.isfinite(v).all() or v.min() < 0 or v.max() > 1):
            raise ShapeMismatch("association entries must be probabilities in [0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _upsampled(map_lat: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    t = torch.from_numpy(np.ascontiguousarray(map_lat, dtype=np.float32))[None, None]
    out = torch.nn.functional.interpolate(t, size=shape, mode="bilinear", align_corners=False)
    return out[0, 0].numpy()


def object_response_maps(
    img_from: InputImage,
    objects_from: FrameObjects,
    img_to: InputImage,
    backend: DiffusionBackend,
    projector: ExemplarProjector,
    cfg: RunConfig,
    matching: MatchingConfig = DEFAULT_MATCHING,
) -> list[np.ndarray]:
    """For each object of ``objects_from``, its cross-attention response over
    ``img_to``, upsampled to image resolution."""
    maps = []
    shape = (img_to.height, img_to.width)
    for obj in objects_from.objects:
        e = project_exemplar(img_from, obj.box, projector)
        m_c = cross_map_only(img_to, e, cfg, backend, config=matching)
        maps.append(_upsampled(m_c, shape))
    return maps


def pooled_evidence(forward_maps: list[np.ndarray], cur: FrameObjects,
                    backward_maps: list[np.ndarray], prev: FrameObjects) -> np.ndarray:
    """(n_prev, n_cur) mean of forward-over-target and backward-over-source pools."""
    n_prev, n_cur = len(forward_maps), len(backward_maps)
    fwd = np.zeros((n_prev, n_cur), np.float32)
    bwd = np.zeros((n_prev, n_cur), np.float32)
    cur_masks = [cur.mask(o.id) for o in cur.objects]
    prev_masks = [prev.mask(o.id) for o in prev.objects]
    for i in range(n_prev):
        for j in range(n_cur):
            fwd[i, j] = forward_maps[i][cur_masks[j]].mean()
            bwd[i, j] = backward_maps[j][prev_masks[i]].mean()
    return (fwd + bwd) / 2.0


def match_objects(
    prev_img: InputImage,
    prev: FrameObjects,
    cur_img: InputImage,
    cur: FrameObjects,
    backend: DiffusionBackend,
    linkage: LinkageHead,
    projector: ExemplarProjector,
    cfg: RunConfig,
    matching: MatchingConfig = DEFAULT_MATCHING,
) -> AssociationMatrix:
    if prev.n == 0 or cur.n == 0:
        raise EmptyFrame(f"cannot match frames with {prev.n} and {cur.n} objects")
    if not linkage.trained:
        raise UntrainedState("linkage head has no trained weights loaded")
    forward = object_response_maps(prev_img, prev, cur_img, backend, projector, cfg, matching)
    backward = object_response_maps(cur_img, cur, prev_img, backend, projector, cfg, matching)
    evidence = pooled_evidence(forward, cur, backward, prev)
    probs = linkage_probabilities(linkage, forward, prev, backward, cur, evidence)
    return AssociationMatrix(values=probs)


def linkage_probabilities(linkage: LinkageHead,
                          forward_maps: list[np.ndarray], prev: FrameObjects,
                          backward_maps: list[np.ndarray], cur: FrameObjects,
                          evidence: np.ndarray) -> np.ndarray:
    """Run the linkage head; shared by inference and training."""
    prev_maps = torch.from_numpy(np.stack(forward_maps)[:, None].astype(np.float32))
    cur_maps = torch.from_numpy(np.stack(backward_maps)[:, None].astype(np.float32))
    prev_props = torch.from_numpy(np.stack([prev.property_vector(o) for o in prev.objects]))
    cur_props = torch.from_numpy(np.stack([cur.property_vector(o) for o in cur.objects]))
    linkage.eval()
    with torch.no_grad():
        logits = linkage(prev_maps, prev_props, cur_maps, cur_props,
                         torch.from_numpy(evidence.astype(np.float32)))
        probs = torch.sigmoid(logits).numpy().astype(np.float32)
    return probs
