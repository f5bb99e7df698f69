import numpy as np
import pytest

from scopematch.core import ExemplarBox, box_iou
from scopematch.harness import BoxErrorKind, classify_box, perturb_box

GT = ExemplarBox(0, 0, 100, 100)


class TestClassifyBox:
    def test_exact_box_is_precise(self):
        assert classify_box(GT, GT) == BoxErrorKind.NONE

    def test_shift_fixture(self):
        box = ExemplarBox(60, 0, 100, 100)
        assert box_iou(box, GT) == pytest.approx(0.25)
        assert classify_box(box, GT) == BoxErrorKind.SHIFT

    def test_size_fixture(self):
        box = ExemplarBox(0, 0, 160, 160)
        assert box.area / GT.area == pytest.approx(2.56)
        assert box_iou(box, GT) == pytest.approx(10000 / 25600)
        assert classify_box(box, GT) == BoxErrorKind.SIZE

    def test_small_overlapping_jitter_is_precise(self):
        box = ExemplarBox(10, 10, 100, 100)  # IoU = 81/119 > 0.5
        assert classify_box(box, GT) == BoxErrorKind.NONE

    def test_rule_precedence_shift_first(self):
        # displaced AND rescaled: shift wins by precedence
        box = ExemplarBox(80, 0, 160, 160)
        assert classify_box(box, GT) == BoxErrorKind.SHIFT


class TestPerturbBox:
    @pytest.mark.parametrize("kind", [BoxErrorKind.SHIFT, BoxErrorKind.SIZE,
                                      BoxErrorKind.ASPECT_RATIO])
    def test_generator_classifier_duality(self, kind):
        box = perturb_box(GT, kind, seed=1)
        assert classify_box(box, GT) == kind
        assert box_iou(box, GT) < 0.5

    def test_deterministic(self):
        a = perturb_box(GT, BoxErrorKind.SHIFT, seed=9)
        b = perturb_box(GT, BoxErrorKind.SHIFT, seed=9)
        assert (a.x0, a.y0, a.w, a.h) == (b.x0, b.y0, b.w, b.h)

    def test_none_kind_rejected(self):
        with pytest.raises(ValueError):
            perturb_box(GT, BoxErrorKind.NONE, seed=0)

    def test_duality_property_over_random_boxes(self):
        rng = np.random.default_rng(5)
        kinds = [BoxErrorKind.SHIFT, BoxErrorKind.SIZE, BoxErrorKind.ASPECT_RATIO]
        for i in range(60):
            gt = ExemplarBox(float(rng.uniform(0, 200)), float(rng.uniform(0, 200)),
                             float(rng.uniform(10, 120)), float(rng.uniform(10, 120)))
            kind = kinds[i % 3]
            box = perturb_box(gt, kind, seed=i)
            assert classify_box(box, gt) == kind
