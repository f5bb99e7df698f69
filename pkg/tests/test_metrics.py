import itertools

import numpy as np
import pytest

from scopematch.errors import EmptyList, ShapeMismatch
from scopematch.metrics import (
    CountRecord,
    DEFAULT_THRESHOLDS,
    average_precision,
    iou_matrix,
    mae,
    rmse,
    seg_score,
)


def random_label_map(rng, size=24, max_instances=5, min_side=2, max_side=8):
    """Scatter random rectangles; later ones overwrite earlier ones."""
    labels = np.zeros((size, size), np.int32)
    n = rng.integers(0, max_instances + 1)
    for i in range(1, n + 1):
        w = int(rng.integers(min_side, max_side))
        h = int(rng.integers(min_side, max_side))
        x = int(rng.integers(0, size - w))
        y = int(rng.integers(0, size - h))
        labels[y:y + h, x:x + w] = i
    # drop ids that were fully overwritten, keep contiguous
    out = np.zeros_like(labels)
    nxt = 0
    for i in range(1, n + 1):
        if (labels == i).any():
            nxt += 1
            out[labels == i] = nxt
    return out


def oracle_iou(gt, pred):
    """Scalar-loop IoU matrix."""
    gt_ids = sorted(set(gt.ravel().tolist()) - {0})
    pred_ids = sorted(set(pred.ravel().tolist()) - {0})
    iou = np.zeros((len(gt_ids), len(pred_ids)))
    for gi, g in enumerate(gt_ids):
        for pi, p in enumerate(pred_ids):
            inter = 0
            union = 0
            for a, b in zip(gt.ravel(), pred.ravel()):
                if a == g and b == p:
                    inter += 1
                if a == g or b == p:
                    union += 1
            iou[gi, pi] = inter / union if union else 0.0
    return iou


def oracle_best_matching(iou, threshold):
    """Exhaustive search maximizing (match count, total IoU) over eligible pairs."""
    n_g, n_p = iou.shape
    best = (0, 0.0)
    small, large, transposed = (n_g, n_p, False) if n_g <= n_p else (n_p, n_g, True)
    for subset in itertools.permutations(range(large), small):
        count, total = 0, 0.0
        for i, j in enumerate(subset):
            v = iou[j, i] if transposed else iou[i, j]
            if v > threshold:
                count += 1
                total += v
        best = max(best, (count, total))
    return best[0]


class TestAveragePrecision:
    def test_perfect_three_instances(self, rng):
        gt = random_label_map(rng, max_instances=3, min_side=3)
        while gt.max() < 3:
            gt = random_label_map(rng, max_instances=3, min_side=3)
        res = average_precision(gt, gt)
        assert all(ap == 1.0 for ap in res.ap_at)
        assert res.mean_ap == 1.0

    def test_one_third_iou_is_miss(self):
        gt = np.zeros((1, 3), np.int32)
        gt[0, :2] = 1
        pred = np.zeros((1, 3), np.int32)
        pred[0, 1:] = 1
        assert iou_matrix(gt, pred)[0, 0] == pytest.approx(1 / 3)
        res = average_precision(pred, gt, thresholds=(0.5,))
        assert res.tp == (0,)
        assert res.fp == (1,)
        assert res.fn == (1,)
        assert res.ap_at == (0.0,)

    def test_two_of_three_matched(self):
        # 3 gt, 3 pred; two pairs at IoU 0.8, one at 0.3 -> AP@0.5 = 2/(2+1+1)
        gt = np.zeros((30, 10), np.int32)
        pred = np.zeros((30, 10), np.int32)
        gt[0:5, 0:8] = 1
        pred[1:5, 0:8] = 1  # 32/40 = 0.8
        gt[10:15, 0:8] = 2
        pred[11:15, 0:8] = 2  # 0.8
        gt[20:30, 0:8] = 3
        pred[20:23, 0:8] = 3  # 24/80 = 0.3
        iou = iou_matrix(gt, pred)
        assert iou[0, 0] == pytest.approx(0.8)
        assert iou[1, 1] == pytest.approx(0.8)
        assert iou[2, 2] == pytest.approx(0.3)
        res = average_precision(pred, gt, thresholds=(0.5,))
        assert res.tp == (2,)
        assert res.ap_at[0] == pytest.approx(0.5)

    def test_both_empty_is_one(self):
        empty = np.zeros((8, 8), np.int32)
        res = average_precision(empty, empty)
        assert all(ap == 1.0 for ap in res.ap_at)

    def test_empty_pred_is_zero(self):
        gt = np.zeros((8, 8), np.int32)
        gt[2:5, 2:5] = 1
        res = average_precision(np.zeros_like(gt), gt)
        assert all(ap == 0.0 for ap in res.ap_at)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            average_precision(np.zeros((4, 4), np.int32), np.zeros((5, 5), np.int32))

    def test_random_fixtures_match_oracle(self):
        rng = np.random.default_rng(7)
        for trial in range(100):
            gt = random_label_map(rng, size=16, max_instances=4)
            pred = random_label_map(rng, size=16, max_instances=4)
            iou_fast = iou_matrix(gt, pred)
            iou_slow = oracle_iou(gt, pred)
            assert iou_fast.shape == iou_slow.shape
            assert np.abs(iou_fast - iou_slow).max() < 1e-9 if iou_fast.size else True
            res = average_precision(pred, gt, thresholds=(0.3, 0.5, 0.75))
            for k, t in enumerate((0.3, 0.5, 0.75)):
                n_gt, n_pred = iou_slow.shape
                if n_gt == 0 and n_pred == 0:
                    expected_ap = 1.0
                else:
                    tp = oracle_best_matching(iou_slow, t) if iou_slow.size else 0
                    expected_ap = tp / (n_gt + n_pred - tp)
                assert abs(res.ap_at[k] - expected_ap) < 1e-9

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            gt = random_label_map(rng, size=20)
            pred = random_label_map(rng, size=20)
            res = average_precision(pred, gt, thresholds=DEFAULT_THRESHOLDS)
            aps = list(res.ap_at)
            assert all(a >= b - 1e-12 for a, b in zip(aps, aps[1:]))

    def test_greedy_mode_runs(self, rng):
        gt = random_label_map(rng, size=20)
        pred = random_label_map(rng, size=20)
        res = average_precision(pred, gt, greedy=True)
        assert all(0.0 <= ap <= 1.0 for ap in res.ap_at)


class TestSegScore:
    def test_perfect(self, rng):
        gt = random_label_map(rng, size=20, max_instances=4)
        assert seg_score([gt], [gt]) == 1.0

    def test_empty_pred(self):
        gt = np.zeros((8, 8), np.int32)
        gt[1:4, 1:4] = 1
        assert seg_score([np.zeros_like(gt)], [gt]) == 0.0

    def test_three_quarters_coverage(self):
        gt = np.zeros((8, 8), np.int32)
        gt[0:4, 0:4] = 1  # 16 px
        pred = np.zeros_like(gt)
        pred[0:3, 0:4] = 1  # 12 px subset -> J = 12/16
        assert seg_score([pred], [gt]) == pytest.approx(0.75)

    def test_majority_rule_excludes_half(self):
        gt = np.zeros((4, 4), np.int32)
        gt[0:2, :] = 1  # 8 px
        pred = np.zeros_like(gt)
        pred[0:1, :] = 1  # covers exactly half: not matched
        assert seg_score([pred], [gt]) == 0.0

    def test_frame_count_mismatch(self):
        with pytest.raises(ShapeMismatch):
            seg_score([np.zeros((4, 4), np.int32)], [])


class TestCountingMetrics:
    def test_mae_zero(self):
        assert mae([CountRecord(10, 10)]) == 0.0

    def test_mae_formula(self):
        assert mae([CountRecord(8, 10), CountRecord(12, 10)]) == pytest.approx(2.0)

    def test_rmse_zero_both_variants(self):
        for variant in ("conventional", "paper_literal"):
            assert rmse([CountRecord(10, 10)], variant) == 0.0

    def test_rmse_variants(self):
        records = [CountRecord(8, 10), CountRecord(12, 10)]
        assert rmse(records, "conventional") == pytest.approx(2.0)
        assert rmse(records, "paper_literal") == pytest.approx(np.sqrt(8) / 2)

    def test_random_against_loop_oracle(self, rng):
        records = [CountRecord(float(a), float(b))
                   for a, b in rng.integers(0, 100, size=(100, 2))]
        n = len(records)
        mae_oracle = sum(abs(r.c_pred - r.c_gt) for r in records) / n
        sq = sum((r.c_pred - r.c_gt) ** 2 for r in records)
        assert abs(mae(records) - mae_oracle) < 1e-9
        assert abs(rmse(records, "conventional") - np.sqrt(sq / n)) < 1e-9
        assert abs(rmse(records, "paper_literal") - np.sqrt(sq) / n) < 1e-9

    def test_jensen_inequality(self, rng):
        for _ in range(20):
            records = [CountRecord(float(a), float(b))
                       for a, b in rng.integers(0, 50, size=(10, 2))]
            assert mae(records) <= rmse(records, "conventional") + 1e-12

    def test_empty_records(self):
        with pytest.raises(EmptyList):
            mae([])
        with pytest.raises(EmptyList):
            rmse([])

    def test_negative_gt_rejected(self):
        with pytest.raises(ValueError):
            CountRecord(1.0, -2.0)
