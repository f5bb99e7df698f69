"""Instance segmentation metrics: average precision and the SEG score.

AP follows the reference scoring convention: a one-to-one assignment that
maximizes match count first and total IoU second over pairs with IoU strictly
above the threshold, then AP = TP / (TP + FP + FN). A pure greedy matcher is
available behind a flag for sensitivity checks. SEG is the mean Jaccard index
over ground-truth objects, where a prediction matches a ground-truth object
iff it covers strictly more than half of it (at most one can).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import ShapeMismatch
from ..heads.types import InstanceLabelMap

DEFAULT_THRESHOLDS = tuple(np.round(np.arange(0.50, 0.951, 0.05), 2).tolist())


def _labels_of(m) -> np.ndarray:
    return m.labels if isinstance(m, InstanceLabelMap) else np.asarray(m)


def overlap_matrix(gt: np.ndarray, pred: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pixel overlap counts between instances: (overlap[n_gt, n_pred], gt_ids, pred_ids)."""
    if gt.shape != pred.shape:
        raise ShapeMismatch(f"label maps differ in shape: {gt.shape} vs {pred.shape}")
    gt_ids, gt_inv = np.unique(gt, return_inverse=True)
    pred_ids, pred_inv = np.unique(pred, return_inverse=True)
    n_g, n_p = len(gt_ids), len(pred_ids)
    counts = np.bincount(gt_inv.ravel().astype(np.int64) * n_p + pred_inv.ravel(),
                         minlength=n_g * n_p)
    overlap = counts.reshape(n_g, n_p)
    gmask, pmask = gt_ids > 0, pred_ids > 0
    return overlap[np.ix_(gmask, pmask)], gt_ids[gmask], pred_ids[pmask]


def iou_matrix(gt: np.ndarray, pred: np.ndarray) -> np.ndarray:
    overlap, gt_ids, pred_ids = overlap_matrix(gt, pred)
    gt_areas = np.array([(gt == i).sum() for i in gt_ids], dtype=np.float64)
    pred_areas = np.array([(pred == i).sum() for i in pred_ids], dtype=np.float64)
    union = gt_areas[:, None] + pred_areas[None, :] - overlap
    with np.errstate(divide="ignore", invalid="ignore"):
        iou = np.where(union > 0, overlap / union, 0.0)
    return iou


@dataclass(frozen=True)
class APResult:
    thresholds: tuple[float, ...]
    ap_at: tuple[float, ...]
    tp: tuple[int, ...]
    fp: tuple[int, ...]
    fn: tuple[int, ...]

    @property
    def mean_ap(self) -> float:
        return float(np.mean(self.ap_at))

    def at(self, threshold: float) -> float:
        for t, ap in zip(self.thresholds, self.ap_at):
            if abs(t - threshold) < 1e-9:
                return ap
        raise KeyError(f"threshold {threshold} not evaluated")


def _match_count(iou: np.ndarray, threshold: float, greedy: bool) -> int:
    eligible = iou > threshold
    if not eligible.any():
        return 0
    if greedy:
        order = np.argsort(-iou, axis=None)
        used_g, used_p = set(), set()
        tp = 0
        for flat in order:
            g, p = np.unravel_index(flat, iou.shape)
            if not eligible[g, p] or g in used_g or p in used_p:
                continue
            used_g.add(g)
            used_p.add(p)
            tp += 1
        return tp
    n_min = min(iou.shape)
    costs = -eligible.astype(np.float64) - iou / (2 * n_min)
    rows, cols = linear_sum_assignment(costs)
    return int(eligible[rows, cols].sum())


def average_precision(pred, gt, thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
                      greedy: bool = False) -> APResult:
    """AP = TP / (TP + FP + FN) per IoU threshold; empty-vs-empty counts as 1.0."""
    pred_l, gt_l = _labels_of(pred), _labels_of(gt)
    if pred_l.shape != gt_l.shape:
        raise ShapeMismatch(f"label maps differ in shape: {pred_l.shape} vs {gt_l.shape}")
    iou = iou_matrix(gt_l, pred_l)
    n_gt, n_pred = iou.shape
    ap_at, tps, fps, fns = [], [], [], []
    for t in thresholds:
        tp = _match_count(iou, t, greedy) if n_gt and n_pred else 0
        fp = n_pred - tp
        fn = n_gt - tp
        denom = tp + fp + fn
        ap_at.append(tp / denom if denom else 1.0)
        tps.append(tp)
        fps.append(fp)
        fns.append(fn)
    return APResult(thresholds=tuple(thresholds), ap_at=tuple(ap_at),
                    tp=tuple(tps), fp=tuple(fps), fn=tuple(fns))


def seg_score(pred_frames: list, gt_frames: list) -> float:
    """Mean Jaccard over ground-truth objects across aligned frames."""
    if len(pred_frames) != len(gt_frames):
        raise ShapeMismatch(f"{len(pred_frames)} pred frames vs {len(gt_frames)} gt frames")
    scores: list[float] = []
    for pred, gt in zip(pred_frames, gt_frames):
        pred_l, gt_l = _labels_of(pred), _labels_of(gt)
        overlap, gt_ids, pred_ids = overlap_matrix(gt_l, pred_l)
        gt_areas = np.array([(gt_l == i).sum() for i in gt_ids], dtype=np.float64)
        pred_areas = np.array([(pred_l == i).sum() for i in pred_ids], dtype=np.float64)
        for gi in range(len(gt_ids)):
            matched = np.nonzero(overlap[gi] > 0.5 * gt_areas[gi])[0]
            if len(matched) == 0:
                scores.append(0.0)
                continue
            pi = matched[0]  # the majority rule admits at most one match
            union = gt_areas[gi] + pred_areas[pi] - overlap[gi, pi]
            scores.append(float(overlap[gi, pi] / union))
    return float(np.mean(scores)) if scores else 1.0
