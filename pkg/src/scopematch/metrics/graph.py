"""Tracking metrics: TRA and LNK via acyclic-graph-matching edit costs.

Vertices are per-frame detections; a prediction vertex detects a reference
vertex iff it covers strictly more than half of its pixels (at most one can).
The edit cost charges: deleting spurious vertices (FP, weight 1), adding
missed vertices (FN, 10), splitting vertices that fused several reference
objects (NS, 5); deleting redundant edges (ED, 1), adding missing edges
(EA, 1.5) and correcting edge semantics, track-link vs parent-link (EC, 1).
TRA = 1 - min(cost, cost0) / cost0 where cost0 builds the reference graph
from nothing (10 per vertex + 1.5 per edge). LNK is the same ratio restricted
to the edge operations with vertex matching held fixed.
"""

from __future__ import annotations

import numpy as np

from ..errors import FrameMismatch
from ..tracking.graph import TrackingGraph

W_NS = 5.0
W_FN = 10.0
W_FP = 1.0
W_ED = 1.0
W_EA = 1.5
W_EC = 1.0


def _detection_map(pred: TrackingGraph, gt: TrackingGraph) -> dict[tuple[int, int], tuple[int, int]]:
    """gt vertex -> pred vertex covering >50% of it."""
    det: dict[tuple[int, int], tuple[int, int]] = {}
    for t, (pf, gf) in enumerate(zip(pred.frames, gt.frames)):
        if pf.shape != gf.shape:
            raise FrameMismatch(f"frame {t}: shapes {pf.shape} vs {gf.shape}")
        gt_ids = sorted(set(np.unique(gf).tolist()) - {0})
        for g in gt_ids:
            mask = gf == g
            area = int(mask.sum())
            vals, counts = np.unique(pf[mask], return_counts=True)
            for v, c in zip(vals, counts):
                if v != 0 and c > 0.5 * area:
                    det[(t, int(g))] = (t, int(v))
                    break
    return det


def aogm_costs(pred: TrackingGraph, gt: TrackingGraph) -> dict[str, float]:
    """Operation counts/costs for building gt from pred under the fixed matching."""
    if pred.n_frames != gt.n_frames:
        raise FrameMismatch(f"{pred.n_frames} pred frames vs {gt.n_frames} gt frames")
    det = _detection_map(pred, gt)
    gt_vertices = gt.vertices()
    pred_vertices = pred.vertices()
    fn = sum(1 for v in gt_vertices if v not in det)
    detected_by: dict[tuple[int, int], int] = {}
    for p in det.values():
        detected_by[p] = detected_by.get(p, 0) + 1
    fp = sum(1 for v in pred_vertices if v not in detected_by)
    ns = sum(k - 1 for k in detected_by.values())

    gt_edges = gt.edges()
    pred_edges = pred.edges()
    ea = 0
    ec = 0
    used_pred_edges = set()
    for (g1, g2), semantics in gt_edges.items():
        p1, p2 = det.get(g1), det.get(g2)
        if p1 is None or p2 is None or (p1, p2) not in pred_edges:
            ea += 1
            continue
        used_pred_edges.add((p1, p2))
        if pred_edges[(p1, p2)] != semantics:
            ec += 1
    ed = sum(1 for e in pred_edges if e not in used_pred_edges)

    return {
        "fn": fn, "fp": fp, "ns": ns, "ed": ed, "ea": ea, "ec": ec,
        "n_gt_vertices": len(gt_vertices), "n_gt_edges": len(gt_edges),
        "aogm": W_FN * fn + W_FP * fp + W_NS * ns + W_ED * ed + W_EA * ea + W_EC * ec,
        "aogm_edges": W_ED * ed + W_EA * ea + W_EC * ec,
        "aogm0": W_FN * len(gt_vertices) + W_EA * len(gt_edges),
        "aogm0_edges": W_EA * len(gt_edges),
    }


def _score(cost: float, cost0: float) -> float:
    if cost0 == 0:
        return 1.0 if cost == 0 else 0.0
    return 1.0 - min(cost, cost0) / cost0


def tra_lnk(pred: TrackingGraph, gt: TrackingGraph) -> tuple[float, float]:
    c = aogm_costs(pred, gt)
    return _score(c["aogm"], c["aogm0"]), _score(c["aogm_edges"], c["aogm0_edges"])
