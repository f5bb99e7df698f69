import numpy as np
import pytest
import torch

from scopematch.backend import MockBackend
from scopematch.core import InputImage


def central_difference(fn, param, idx, eps=1e-4):
    """Two-sided finite difference of fn() w.r.t. one parameter entry."""
    with torch.no_grad():
        orig = param.view(-1)[idx].item()
        param.view(-1)[idx] = orig + eps
        hi = float(fn())
        param.view(-1)[idx] = orig - eps
        lo = float(fn())
        param.view(-1)[idx] = orig
    return (hi - lo) / (2 * eps)


def check_gradients(module, loss_fn, n_params=4, n_samples=6, eps=1e-4, rtol=1e-3,
                    seed=0):
    """Assert autograd gradients match central differences on sampled entries."""
    params = [p for p in module.parameters() if p.requires_grad]
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    rng = np.random.default_rng(seed)
    for p in params[:n_params]:
        if p.grad is None:
            continue
        for _ in range(n_samples):
            idx = int(rng.integers(0, p.numel()))
            analytic = float(p.grad.view(-1)[idx])
            numeric = central_difference(loss_fn, p, idx, eps)
            scale = max(abs(analytic), abs(numeric), 1e-4)
            assert abs(analytic - numeric) / scale < rtol, (
                f"gradient mismatch at {idx}: analytic {analytic}, numeric {numeric}")


def disk_image(size=64, centers=((16, 16), (48, 48)), radius=6.0, bg=0.05, fg=0.95,
               noise=0.0, seed=0):
    """Synthetic image of bright disks on a dark background, plus its label map."""
    yy, xx = np.mgrid[0:size, 0:size]
    pixels = np.full((size, size), bg, dtype=np.float32)
    labels = np.zeros((size, size), dtype=np.int32)
    for i, (cx, cy) in enumerate(centers, start=1):
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2
        pixels[mask] = fg
        labels[mask] = i
    if noise:
        rng = np.random.default_rng(seed)
        pixels = pixels + rng.normal(0.0, noise, pixels.shape).astype(np.float32)
    return InputImage(pixels=np.clip(pixels, 0.0, 1.0)), labels


@pytest.fixture(scope="session")
def mock_backend():
    return MockBackend()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
