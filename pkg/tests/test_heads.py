import numpy as np
import pytest
import torch
from scipy import ndimage

from scopematch.core import RunConfig, TaskKind
from scopematch.conditioning import template_embedding
from scopematch.errors import ShapeMismatch, UntrainedState
from scopematch.heads import (
    CountingHead,
    DensityMap,
    InstanceLabelMap,
    LinkageHead,
    SegmentationHead,
    bundle_channels,
    bundle_to_tensor,
    count,
    head_forward_raw,
    instances_from_probs,
    load_checkpoint,
    save_checkpoint,
    segment,
)
from scopematch.matching import run_matching

from conftest import disk_image


@pytest.fixture(scope="module")
def bundle(mock_backend):
    img, _ = disk_image(size=64, centers=((16, 16), (48, 48)), radius=7)
    cfg = RunConfig(task=TaskKind.SEGMENTATION, rng_seed=0, resize_edge=64)
    return run_matching(img, template_embedding(mock_backend), cfg, mock_backend)


class TestInstanceLabelMap:
    def test_from_labels_raster_order(self):
        raw = np.zeros((4, 4), np.int32)
        raw[0, 1] = 9
        raw[2, 2] = 4
        m = InstanceLabelMap.from_labels(raw)
        assert m.n_instances == 2
        assert m.labels[0, 1] == 1
        assert m.labels[2, 2] == 2
        m.validate()

    def test_validate_rejects_split_instance(self):
        raw = np.zeros((4, 4), np.int32)
        raw[0, 0] = 1
        raw[3, 3] = 1
        with pytest.raises(ShapeMismatch):
            InstanceLabelMap(labels=raw, n_instances=1).validate()


class TestDensityMap:
    def test_rounding(self):
        d = DensityMap(values=np.full((2, 2), 3.0, np.float32))
        assert d.total == pytest.approx(12.0)
        assert d.count == 12

    def test_round_half_up(self):
        d = DensityMap(values=np.full((1, 1), 42.5, np.float32))
        assert d.count == 43

    def test_negative_rejected(self):
        with pytest.raises(ShapeMismatch):
            DensityMap(values=np.full((2, 2), -0.1, np.float32))


class TestInstanceExtraction:
    def test_all_background(self):
        m = instances_from_probs(np.zeros((8, 8)), np.zeros((8, 8)))
        assert m.n_instances == 0
        assert not m.labels.any()

    def test_two_disjoint_squares(self):
        fg = np.zeros((10, 10))
        fg[1:4, 1:4] = 1.0
        fg[6:9, 6:9] = 1.0
        m = instances_from_probs(fg, np.zeros_like(fg))
        assert m.n_instances == 2
        m.validate()

    def test_boundary_split_and_reassign(self):
        # one region split by a 1-px boundary line; flood-fill oracle on the
        # same core mask must agree, and reassignment must leave no holes
        fg = np.zeros((9, 12))
        fg[2:7, 2:10] = 1.0
        boundary = np.zeros_like(fg)
        boundary[2:7, 5] = 1.0
        m = instances_from_probs(fg, boundary)
        assert m.n_instances == 2
        core = (fg > 0.5) & ~(boundary > 0.5)
        oracle_labels, oracle_n = ndimage.label(
            core, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
        assert oracle_n == 2
        # cores keep their oracle component, boundary pixels joined one of them
        assert ((m.labels > 0) == (fg > 0.5)).all()
        for i in (1, 2):
            assert np.unique(m.labels[oracle_labels == i]).tolist() == [i]
        m.validate()


class TestSegmentationHead:
    def test_forward_shape_and_channels(self, bundle):
        head = SegmentationHead(in_channels=bundle_channels(bundle), dim=32, depth=2)
        out = head_forward_raw(bundle, head)
        assert out.shape == (3, bundle.h, bundle.w)

    def test_untrained_refuses_to_segment(self, bundle):
        head = SegmentationHead(in_channels=bundle_channels(bundle), dim=32, depth=2)
        with pytest.raises(UntrainedState):
            segment(bundle, head)

    def test_segment_returns_label_map(self, bundle):
        head = SegmentationHead(in_channels=bundle_channels(bundle), dim=32, depth=2)
        head.trained = True
        m = segment(bundle, head)
        assert m.labels.shape == (bundle.h * 8, bundle.w * 8)
        m.validate()

    def test_batch_permutation_equivariance(self, bundle):
        head = SegmentationHead(in_channels=bundle_channels(bundle), dim=32, depth=2)
        head.eval()
        x = bundle_to_tensor(bundle)
        other = torch.flip(x, dims=[1])
        batch = torch.stack([x, other])
        swapped = torch.stack([other, x])
        with torch.no_grad():
            out1 = head(batch)
            out2 = head(swapped)
        assert torch.allclose(out1[0], out2[1], atol=1e-6)
        assert torch.allclose(out1[1], out2[0], atol=1e-6)


class TestCountingHead:
    def test_upsamples_by_eight_nonnegative(self, bundle):
        head = CountingHead(in_channels=bundle_channels(bundle), mid_channels=8)
        out = head_forward_raw(bundle, head).detach()
        assert out.shape == (1, bundle.h * 8, bundle.w * 8)
        assert float(out.min()) >= 0.0

    def test_zeroed_head_uniform_output(self, bundle):
        head = CountingHead(in_channels=bundle_channels(bundle), mid_channels=8)
        with torch.no_grad():
            for p in head.parameters():
                p.zero_()
        out = head_forward_raw(bundle, head)
        assert torch.allclose(out, torch.zeros_like(out))

    def test_count_requires_training(self, bundle):
        head = CountingHead(in_channels=bundle_channels(bundle), mid_channels=8)
        with pytest.raises(UntrainedState):
            count(bundle, head)
        head.trained = True
        d = count(bundle, head)
        assert d.total >= 0.0

    def test_batch_permutation_equivariance(self, bundle):
        head = CountingHead(in_channels=bundle_channels(bundle), mid_channels=8)
        head.eval()
        x = bundle_to_tensor(bundle)
        other = torch.flip(x, dims=[2])
        with torch.no_grad():
            out1 = head(torch.stack([x, other]))
            out2 = head(torch.stack([other, x]))
        assert torch.allclose(out1[0], out2[1], atol=1e-6)
        assert torch.allclose(out1[1], out2[0], atol=1e-6)

    def test_mass_preserved_when_back_projected(self, bundle):
        from scopematch.core import ResizePlan

        head = CountingHead(in_channels=bundle_channels(bundle), mid_channels=8)
        head.trained = True
        d_model = count(bundle, head)
        plan = ResizePlan(orig_width=100, orig_height=80, edge=bundle.w * 8)
        d_orig = count(bundle, head, plan=plan)
        assert d_orig.values.shape == (80, 100)
        if d_model.total > 0:
            assert d_orig.total == pytest.approx(d_model.total, rel=1e-3)


class TestLinkageHead:
    def test_pairwise_logit_shape(self):
        head = LinkageHead(dim=32, attn_feat_dim=16)
        prev_maps = torch.rand(3, 1, 8, 8)
        cur_maps = torch.rand(2, 1, 8, 8)
        logits = head(prev_maps, torch.rand(3, 5), cur_maps, torch.rand(2, 5),
                      torch.rand(3, 2))
        assert logits.shape == (3, 2)

    def test_single_object_shape(self):
        head = LinkageHead(dim=32, attn_feat_dim=16)
        logits = head(torch.rand(1, 1, 8, 8), torch.rand(1, 5),
                      torch.rand(1, 1, 8, 8), torch.rand(1, 5), torch.rand(1, 1))
        assert logits.shape == (1, 1)


class TestCheckpoints:
    def test_roundtrip_bit_exact(self, tmp_path, bundle):
        head = SegmentationHead(in_channels=bundle_channels(bundle), dim=32, depth=2)
        head.trained = True
        p = str(tmp_path / "seg.pt")
        save_checkpoint(p, head, "segmentation_head", trained=True)
        loaded, meta = load_checkpoint(p)
        assert meta["trained"] is True
        assert loaded.trained is True
        for (ka, va), (kb, vb) in zip(head.state_dict().items(), loaded.state_dict().items()):
            assert ka == kb
            assert torch.equal(va, vb)

    def test_projector_checkpoint(self, tmp_path):
        from scopematch.conditioning import ExemplarProjector

        proj = ExemplarProjector(backbone="pooled")
        p = str(tmp_path / "proj.pt")
        save_checkpoint(p, proj, "projector", trained=False)
        loaded, meta = load_checkpoint(p)
        assert loaded.backbone_kind == "pooled"
        for (_, va), (_, vb) in zip(proj.state_dict().items(), loaded.state_dict().items()):
            assert torch.equal(va, vb)

    def test_unknown_kind_rejected(self, tmp_path, bundle):
        head = CountingHead(in_channels=bundle_channels(bundle))
        with pytest.raises(ValueError):
            save_checkpoint(str(tmp_path / "x.pt"), head, "nope", trained=False)
