import numpy as np
import pytest
import torch

from scopematch.errors import DivergedLoss, EmptyDataset, ManifestError
from scopematch.training import TrainConfig, train_loop
from scopematch.training.loop import ComponentDriver


class ScriptedDriver(ComponentDriver):
    """Minimizes (w - 3)^2 while reporting a scripted validation curve."""

    kind = "counting_head"
    higher_is_better = False

    def __init__(self, val_curve, n=3, make_nan=False):
        self.lin = torch.nn.Linear(1, 1, bias=False)
        self.val_curve = list(val_curve)
        self.calls = 0
        self.n = n
        self.make_nan = make_nan

    def module(self):
        return self.lin

    def n_train(self):
        return self.n

    def train_step(self, index):
        if self.make_nan:
            return self.lin.weight.sum() * float("nan")
        return ((self.lin.weight - 3.0) ** 2).sum()

    def validate(self):
        v = self.val_curve[min(self.calls, len(self.val_curve) - 1)]
        self.calls += 1
        return v


class TestLoopSemantics:
    def test_patience_one_worsening_stops_after_two_epochs(self):
        driver = ScriptedDriver(val_curve=[1.0, 2.0, 3.0, 4.0])
        cfg = TrainConfig(learning_rate=0.1, patience=1, max_epochs=50, seed=0)
        result = train_loop(driver, cfg)
        assert result.epochs_run == 2
        assert result.best_epoch == 1

    def test_plateau_counts_as_no_improvement(self):
        driver = ScriptedDriver(val_curve=[1.0, 1.0, 1.0, 1.0])
        cfg = TrainConfig(learning_rate=0.1, patience=2, max_epochs=50, seed=0)
        result = train_loop(driver, cfg)
        assert result.epochs_run == 3

    def test_fixed_epochs_ignores_patience(self):
        driver = ScriptedDriver(val_curve=[1.0, 2.0, 3.0, 4.0, 5.0])
        cfg = TrainConfig(learning_rate=0.1, patience=1, max_epochs=5, seed=0,
                          fixed_epochs=True)
        result = train_loop(driver, cfg)
        assert result.epochs_run == 5
        assert result.best_epoch == 1

    def test_empty_dataset(self):
        driver = ScriptedDriver(val_curve=[1.0], n=0)
        with pytest.raises(EmptyDataset):
            train_loop(driver, TrainConfig(max_epochs=2))

    def test_nan_loss_raises(self):
        driver = ScriptedDriver(val_curve=[1.0], make_nan=True)
        with pytest.raises(DivergedLoss):
            train_loop(driver, TrainConfig(max_epochs=2))

    def test_csv_log_written(self, tmp_path):
        driver = ScriptedDriver(val_curve=[3.0, 2.0, 1.0, 1.5])
        cfg = TrainConfig(learning_rate=0.1, patience=1, max_epochs=4, seed=0)
        log = tmp_path / "log.csv"
        train_loop(driver, cfg, log_path=str(log))
        lines = log.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_loss,val_metric"
        assert len(lines) == 5

    def test_checkpoint_written(self, tmp_path):
        from scopematch.heads import CountingHead, load_checkpoint

        class CountDriver(ScriptedDriver):
            def __init__(self):
                super().__init__(val_curve=[2.0, 1.0, 3.0])
                self.head = CountingHead(in_channels=3, mid_channels=4)

            def module(self):
                return self.head

            def train_step(self, index):
                x = torch.zeros(1, 3, 8, 8)
                return self.head(x).sum() * 0 + (list(self.head.parameters())[0] ** 2).sum()

        driver = CountDriver()
        cfg = TrainConfig(learning_rate=0.01, patience=1, max_epochs=3, seed=0)
        path = tmp_path / "count.pt"
        result = train_loop(driver, cfg, checkpoint_path=str(path))
        assert result.checkpoint_path == str(path)
        loaded, meta = load_checkpoint(str(path))
        assert loaded.trained
        assert meta["extra"]["best_epoch"] == result.best_epoch


class TestDeterminism:
    def _tiny_driver(self):
        from scopematch.backend import MockBackend
        from scopematch.conditioning import template_embedding
        from scopematch.core import RunConfig, TaskKind
        from scopematch.heads import CountingHead, bundle_channels, bundle_to_tensor
        from scopematch.matching import run_matching
        from scopematch.training.prep import CountingDriver, CountSample

        from conftest import disk_image

        backend = MockBackend()
        img, _ = disk_image(size=64, centers=((16, 16), (48, 48)), radius=8)
        cfg = RunConfig(task=TaskKind.COUNTING, rng_seed=0, resize_edge=64)
        bundle = run_matching(img, template_embedding(backend), cfg, backend)
        gt = torch.zeros(64, 64)
        gt[16, 16] = 1.0
        gt[48, 48] = 1.0
        sample = CountSample(x=bundle_to_tensor(bundle), bundle=bundle,
                             gt_density=gt, gt_count=2.0)
        torch.manual_seed(7)
        head = CountingHead(in_channels=bundle_channels(bundle), mid_channels=6)
        return CountingDriver(head, [sample, sample])

    def test_same_seed_same_curve(self):
        r1 = train_loop(self._tiny_driver(), TrainConfig(learning_rate=1e-3, max_epochs=5,
                                                         seed=3, fixed_epochs=True))
        r2 = train_loop(self._tiny_driver(), TrainConfig(learning_rate=1e-3, max_epochs=5,
                                                         seed=3, fixed_epochs=True))
        for a, b in zip(r1.history, r2.history):
            assert a["train_loss"] == pytest.approx(b["train_loss"], abs=1e-5)
            assert a["val_metric"] == pytest.approx(b["val_metric"], abs=1e-5)


class TestOverfitSanity:
    def test_seg_head_perfect_on_two_samples(self, tmp_path):
        from scopematch.backend import MockBackend
        from scopematch.conditioning import ExemplarProjector
        from scopematch.matching import MatchingConfig
        from scopematch.synthetic import write_suite
        from scopematch.training import load_manifest
        from scopematch.training.prep import SegmentationDriver, build_seg_samples
        from scopematch.heads import SegmentationHead, bundle_channels

        manifest_path = write_suite(str(tmp_path / "suite"), n_per_task=2, size=96, seed=5)
        manifest = load_manifest(manifest_path)
        backend = MockBackend()
        projector = ExemplarProjector(backbone="pooled")
        matching = MatchingConfig(cross_scales=(1, 2), self_scales=(1, 2))
        samples = build_seg_samples(manifest, backend, projector, mode="S", seed=0,
                                    matching=matching)
        assert len(samples) == 2
        torch.manual_seed(0)
        head = SegmentationHead(in_channels=samples[0].x.shape[0], dim=32, depth=2,
                                n_heads=2)
        driver = SegmentationDriver(head, samples)
        cfg = TrainConfig(learning_rate=3e-3, patience=200, max_epochs=200, seed=0)
        result = train_loop(driver, cfg)
        assert result.best_metric == pytest.approx(1.0)
        assert result.epochs_run <= 200


class TestManifest:
    def test_load_and_select(self, tmp_path):
        from scopematch.synthetic import write_suite
        from scopematch.training import load_manifest

        path = write_suite(str(tmp_path / "s"), n_per_task=2, size=64, seed=1)
        m = load_manifest(path)
        assert len(m.select(task="segmentation")) == 2
        assert len(m.select(task="counting")) == 2
        assert len(m.select(task="tracking")) == 2
        assert all(s.split == "train" for s in m.samples)

    def test_malformed_manifest(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"samples": [{"id": "x"}]}')
        with pytest.raises(ManifestError):
            from scopematch.training import load_manifest

            load_manifest(str(p))

    def test_missing_manifest(self, tmp_path):
        from scopematch.training import load_manifest

        with pytest.raises(ManifestError):
            load_manifest(str(tmp_path / "none.json"))
