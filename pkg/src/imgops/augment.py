"""Label-preserving training augmentation.

Only perturbations that commute with the orientation label are offered:
intensity scaling, additive noise and small translations. Flips, rotations
and transpositions would relabel the sample and are never applied here.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.imgops.slice import Slice


@dataclass(frozen=True)
class AugmentConfig:
    intensity: bool = True
    noise: bool = True
    shift: bool = True
    scale_range: Tuple[float, float] = (0.9, 1.1)
    noise_fraction: float = 0.05
    max_shift_fraction: float = 0.05

    def __post_init__(self):
        low, high = self.scale_range
        if not 0.9 <= low <= high <= 1.1:
            raise ValueError(f"scale_range must lie within [0.9, 1.1], got {self.scale_range}")
        if not 0.0 <= self.noise_fraction <= 0.05:
            raise ValueError(f"noise_fraction must be in [0, 0.05], got {self.noise_fraction}")
        if not 0.0 <= self.max_shift_fraction <= 0.05:
            raise ValueError(f"max_shift_fraction must be in [0, 0.05], got {self.max_shift_fraction}")

    @classmethod
    def off(cls) -> "AugmentConfig":
        return cls(intensity=False, noise=False, shift=False)

    @property
    def enabled(self) -> bool:
        return self.intensity or self.noise or self.shift


def _translate(pixels: np.ndarray, dy: int, dx: int) -> np.ndarray:
    out = np.zeros_like(pixels)
    h, w = pixels.shape[1:]
    src_y = slice(max(0, -dy), min(h, h - dy))
    dst_y = slice(max(0, dy), min(h, h + dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_x = slice(max(0, dx), min(w, w + dx))
    out[:, dst_y, dst_x] = pixels[:, src_y, src_x]
    return out


def augment(slice_: Slice, rng_seed: int, cfg: AugmentConfig) -> Slice:
    """Randomly perturb *slice_*; the same seed always gives the same result."""
    if not cfg.enabled:
        return slice_
    rng = np.random.default_rng(rng_seed)
    pixels = slice_.pixels.astype(np.float64)
    dynamic_range = float(pixels.max() - pixels.min())

    if cfg.intensity:
        pixels = pixels * rng.uniform(*cfg.scale_range)
    if cfg.noise and dynamic_range > 0:
        sigma = rng.uniform(0.0, cfg.noise_fraction) * dynamic_range
        pixels = pixels + rng.normal(0.0, sigma, size=pixels.shape)
    if cfg.shift:
        h, w = pixels.shape[1:]
        max_dy = int(np.floor(cfg.max_shift_fraction * h))
        max_dx = int(np.floor(cfg.max_shift_fraction * w))
        dy = int(rng.integers(-max_dy, max_dy + 1))
        dx = int(rng.integers(-max_dx, max_dx + 1))
        if dy or dx:
            pixels = _translate(pixels, dy, dx)
    return slice_.with_pixels(pixels.astype(np.float32))
