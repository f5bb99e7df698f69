"""scopematch: microscopy segmentation, tracking and counting by
within-image attention matching on a frozen latent diffusion model."""

__version__ = "0.1.0"
