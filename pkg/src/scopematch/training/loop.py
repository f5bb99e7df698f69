"""Generic training loop: AdamW, cosine annealing, patience-based early stop.

Component specifics (what a training step is and which validation metric is
tracked) live in small driver objects; the loop owns seeding, optimization,
best-checkpoint keeping and the CSV log. The projector recipe uses a fixed
epoch budget instead of early stopping.
"""

from __future__ import annotations

import copy
import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import DivergedLoss, EmptyDataset
from ..heads.checkpoint import save_checkpoint


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 0.01
    patience: int = 15
    max_epochs: int = 100
    seed: int = 0
    fixed_epochs: bool = False  # projector recipe: run max_epochs, no early stop

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")


@dataclass
class TrainResult:
    best_metric: float
    best_epoch: int
    epochs_run: int
    history: list[dict] = field(default_factory=list)
    checkpoint_path: str | None = None


class ComponentDriver:
    """One trainable component: its module, step loss and validation metric."""

    kind: str = ""
    higher_is_better: bool = True

    def module(self) -> torch.nn.Module:
        raise NotImplementedError

    def trainable_parameters(self):
        return [p for p in self.module().parameters() if p.requires_grad]

    def n_train(self) -> int:
        raise NotImplementedError

    def train_step(self, index: int) -> torch.Tensor:
        raise NotImplementedError

    def validate(self) -> float:
        raise NotImplementedError


def _improved(value: float, best: float | None, higher: bool) -> bool:
    if best is None:
        return True
    return value > best if higher else value < best


def train_loop(driver: ComponentDriver, cfg: TrainConfig,
               checkpoint_path: str | None = None,
               log_path: str | None = None) -> TrainResult:
    if driver.n_train() == 0:
        raise EmptyDataset("no training samples")
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    module = driver.module()
    opt = torch.optim.AdamW(driver.trainable_parameters(), lr=cfg.learning_rate,
                            betas=cfg.betas, weight_decay=cfg.weight_decay)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(cfg.max_epochs, 1))

    best_metric: float | None = None
    best_state = None
    best_epoch = 0
    bad_epochs = 0
    history: list[dict] = []

    for epoch in range(1, cfg.max_epochs + 1):
        module.train()
        order = rng.permutation(driver.n_train())
        losses = []
        for idx in order:
            loss = driver.train_step(int(idx))
            if not torch.isfinite(loss):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
        sched.step()
        module.eval()
        val = float(driver.validate())
        if math.isnan(val):
            raise DivergedLoss(f"non-finite validation metric at epoch {epoch}")
        history.append({"epoch": epoch, "train_loss": float(np.mean(losses)), "val_metric": val})
        if _improved(val, best_metric, driver.higher_is_better):
            best_metric = val
            best_epoch = epoch
            best_state = copy.deepcopy(module.state_dict())
            bad_epochs = 0
        else:
            bad_epochs += 1
        if not cfg.fixed_epochs and bad_epochs >= cfg.patience:
            break

    if best_state is not None:
        module.load_state_dict(best_state)
    module.trained = True

    if checkpoint_path:
        save_checkpoint(checkpoint_path, module, driver.kind, trained=True,
                        extra={"best_metric": best_metric, "best_epoch": best_epoch})
    if log_path:
        os.makedirs(os.path.dirname(os.path.abspath(log_path)), exist_ok=True)
        with open(log_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["epoch", "train_loss", "val_metric"])
            writer.writeheader()
            writer.writerows(history)

    return TrainResult(best_metric=float(best_metric), best_epoch=best_epoch,
                       epochs_run=len(history), history=history,
                       checkpoint_path=checkpoint_path)
