"""TRA/LNK metric vs an independent graph-edit simulation oracle."""

import numpy as np
import pytest

from scopematch.errors import FrameMismatch
from scopematch.metrics import tra_lnk
from scopematch.metrics.graph import W_EA, W_EC, W_ED, W_FN, W_FP, W_NS, aogm_costs
from scopematch.tracking.graph import Track, TrackingGraph

GRID = 12  # frames are GRID x GRID label maps
SLOTS = [(0, 0), (0, 4), (0, 8), (4, 0), (4, 4), (4, 8), (8, 0), (8, 4), (8, 8)]


def frame_from_slots(assignment: dict[int, int | tuple[int, ...]]) -> np.ndarray:
    """assignment: label -> slot index (or several slots for a big object)."""
    f = np.zeros((GRID, GRID), np.int32)
    for label, slots in assignment.items():
        if isinstance(slots, int):
            slots = (slots,)
        for s in slots:
            y, x = SLOTS[s]
            f[y:y + 3, x:x + 3] = label
    return f


def build_graph(frame_assignments: list[dict], tracks: list[tuple[int, int, int, int]]) -> TrackingGraph:
    frames = [frame_from_slots(a) for a in frame_assignments]
    return TrackingGraph(
        tracks=[Track(label=l, begin=b, end=e, parent=p) for l, b, e, p in tracks],
        frames=frames,
    )


# --- independent oracle: explicit edit simulation over dict/set graphs ---

def oracle_tra_lnk(pred: TrackingGraph, gt: TrackingGraph):
    T = len(gt.frames)
    assert len(pred.frames) == T

    def ids_in(frame):
        return sorted(v for v in set(frame.ravel().tolist()) if v != 0)

    # detection test by explicit pixel counting
    det = {}
    detected_gts = {}
    for t in range(T):
        for g in ids_in(gt.frames[t]):
            gmask = gt.frames[t] == g
            total = gmask.sum()
            for p in ids_in(pred.frames[t]):
                inter = int(((pred.frames[t] == p) & gmask).sum())
                if 2 * inter > total:
                    det[(t, g)] = (t, p)
                    detected_gts.setdefault((t, p), []).append((t, g))
                    break

    gt_vertices = [(t, g) for t in range(T) for g in ids_in(gt.frames[t])]
    pred_vertices = [(t, p) for t in range(T) for p in ids_in(pred.frames[t])]

    def edge_table(graph):
        by_label = {t.label: t for t in graph.tracks}
        edges = {}
        for tr in graph.tracks:
            for f in range(tr.begin, tr.end):
                edges[((f, tr.label), (f + 1, tr.label))] = "track"
            if tr.parent:
                par = by_label[tr.parent]
                edges[((par.end, tr.parent), (tr.begin, tr.label))] = "parent"
        return edges

    gt_edges = edge_table(gt)
    pred_edges = edge_table(pred)

    # simulate the correction: delete FPs, split NS vertices, add FNs
    n_fp = sum(1 for v in pred_vertices if v not in detected_gts)
    n_fn = sum(1 for v in gt_vertices if v not in det)
    n_ns = sum(len(gs) - 1 for gs in detected_gts.values())

    # after splitting, each detected gt vertex owns a copy inheriting the
    # pred vertex's edges; build the induced gt-side edge set
    induced = {}
    for (u, v), sem in pred_edges.items():
        for gu in detected_gts.get(u, []):
            for gv in detected_gts.get(v, []):
                induced[(gu, gv)] = sem
    n_ea = 0
    n_ec = 0
    used = set()
    for e, sem in gt_edges.items():
        if e in induced:
            used.add((det[e[0]], det[e[1]]))
            if induced[e] != sem:
                n_ec += 1
        else:
            n_ea += 1
    n_ed = sum(1 for e in pred_edges if e not in used)

    aogm = W_FN * n_fn + W_FP * n_fp + W_NS * n_ns + W_ED * n_ed + W_EA * n_ea + W_EC * n_ec
    aogm0 = W_FN * len(gt_vertices) + W_EA * len(gt_edges)
    aogm_e = W_ED * n_ed + W_EA * n_ea + W_EC * n_ec
    aogm0_e = W_EA * len(gt_edges)

    def score(c, c0):
        if c0 == 0:
            return 1.0 if c == 0 else 0.0
        return 1.0 - min(c, c0) / c0

    return score(aogm, aogm0), score(aogm_e, aogm0_e)


# every lineage topology with <= 5 vertices over <= 4 frames that the
# aggregation can produce, plus detection-failure variants
FAMILY = [
    build_graph([{}, {}], []),  # empty
    build_graph([{1: 0}], [(1, 0, 0, 0)]),
    build_graph([{1: 0}, {1: 0}, {1: 0}], [(1, 0, 2, 0)]),
    build_graph([{1: 0}, {1: 1}, {1: 2}], [(1, 0, 2, 0)]),  # moving
    build_graph([{1: 0, 2: 4}, {1: 0, 2: 4}], [(1, 0, 1, 0), (2, 0, 1, 0)]),
    build_graph([{1: 0}, {2: 1, 3: 3}], [(1, 0, 0, 0), (2, 1, 1, 1), (3, 1, 1, 1)]),  # division
    build_graph([{1: 0}, {1: 0, 2: 4}, {1: 0, 2: 4}], [(1, 0, 2, 0), (2, 1, 2, 0)]),  # appearance
    build_graph([{1: 0, 2: 4}, {1: 0}], [(1, 0, 1, 0), (2, 0, 0, 0)]),  # disappearance
    build_graph([{1: 0}, {1: 0}, {2: 1, 3: 3}, {2: 1, 3: 3}],
                [(1, 0, 1, 0), (2, 2, 3, 1), (3, 2, 3, 1)]),  # 5 vertices? no: 6
    build_graph([{1: 4}, {2: 1, 3: 7}, {2: 0, 3: 8}],
                [(1, 0, 0, 0), (2, 1, 2, 1), (3, 1, 2, 1)]),  # division then drift
    build_graph([{1: (0, 1)}, {1: (0, 1)}], [(1, 0, 1, 0)]),  # big object over two slots
    build_graph([{1: 0, 2: 1}, {1: 0, 2: 1}], [(1, 0, 1, 0), (2, 0, 1, 0)]),  # two small
    build_graph([{1: 0}, {1: 1}], [(1, 0, 1, 0)]),
    build_graph([{1: 0, 2: 8}, {1: 1, 2: 7}, {1: 2, 2: 6}],
                [(1, 0, 2, 0), (2, 0, 2, 0)]),  # crossing drift
]


class TestTraLnk:
    def test_identical_graphs_perfect(self):
        for g in FAMILY:
            tra, lnk = tra_lnk(g, g)
            assert tra == 1.0
            assert lnk == 1.0

    def test_empty_pred_zero(self):
        gt = FAMILY[2]
        empty = TrackingGraph(tracks=[], frames=[np.zeros_like(f) for f in gt.frames])
        tra, lnk = tra_lnk(empty, gt)
        assert tra == 0.0
        assert lnk == 0.0

    def test_missing_edge_fixture(self):
        # GT one 3-node track; pred has the same nodes but a broken link:
        # the middle node belongs to a different track
        gt = build_graph([{1: 0}, {1: 0}, {1: 0}], [(1, 0, 2, 0)])
        pred = build_graph([{1: 0}, {2: 0}, {2: 0}],
                           [(1, 0, 0, 0), (2, 1, 2, 0)])
        costs = aogm_costs(pred, gt)
        assert costs["ea"] == 1
        assert costs["aogm"] == pytest.approx(W_EA)
        assert costs["aogm0"] == pytest.approx(3 * W_FN + 2 * W_EA)  # 33
        tra, lnk = tra_lnk(pred, gt)
        assert tra == pytest.approx(1 - 1.5 / 33)
        assert lnk == pytest.approx(1 - 1.5 / 3.0)

    def test_node_split_detected(self):
        # pred fuses two gt objects into one big object -> NS + FP-free
        gt = build_graph([{1: 0, 2: 1}], [(1, 0, 0, 0), (2, 0, 0, 0)])
        pred = build_graph([{1: (0, 1)}], [(1, 0, 0, 0)])
        costs = aogm_costs(pred, gt)
        assert costs["ns"] == 1
        assert costs["fn"] == 0
        assert costs["fp"] == 0

    def test_false_positive_and_negative(self):
        gt = build_graph([{1: 0}], [(1, 0, 0, 0)])
        pred = build_graph([{1: 8}], [(1, 0, 0, 0)])  # far away: misses gt
        costs = aogm_costs(pred, gt)
        assert costs["fn"] == 1
        assert costs["fp"] == 1

    def test_semantics_change_counted(self):
        # gt: one track 1 spanning two frames; pred: division edge between them
        gt = build_graph([{1: 0}, {1: 0}], [(1, 0, 1, 0)])
        pred = build_graph([{1: 0}, {2: 0}], [(1, 0, 0, 0), (2, 1, 1, 1)])
        costs = aogm_costs(pred, gt)
        assert costs["ec"] == 1
        assert costs["ea"] == 0
        assert costs["ed"] == 0

    def test_exhaustive_family_matches_oracle(self):
        for gt in FAMILY:
            for pred in FAMILY:
                if len(pred.frames) != len(gt.frames):
                    continue
                fast = tra_lnk(pred, gt)
                slow = oracle_tra_lnk(pred, gt)
                assert fast[0] == pytest.approx(slow[0], abs=1e-12)
                assert fast[1] == pytest.approx(slow[1], abs=1e-12)

    def test_scores_bounded(self):
        for gt in FAMILY:
            for pred in FAMILY:
                if len(pred.frames) != len(gt.frames):
                    continue
                tra, lnk = tra_lnk(pred, gt)
                assert 0.0 <= tra <= 1.0
                assert 0.0 <= lnk <= 1.0

    def test_frame_mismatch(self):
        with pytest.raises(FrameMismatch):
            tra_lnk(FAMILY[1], FAMILY[2])
