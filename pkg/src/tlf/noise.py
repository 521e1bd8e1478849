"""Seeded Gaussian noise for synthetic degradations.

Uses a 64-bit linear congruential generator (a = 6364136223846793005,
c = 1442695040888963407, mod 2^64) feeding Box-Muller, so any language can
replay the exact stream: draw two states per pair, u1 = ((s >> 11) + 1) *
2^-53, u2 = (s >> 11) * 2^-53, then r*cos / r*sin with r = sqrt(-2 ln u1).
"""

import numpy as np

from ._kernels import lcg_gaussian
from .tensor import ImageTensor


def gaussian_field(seed: int, shape) -> np.ndarray:
    """Standard normal array of the given shape, fully determined by seed."""
    n = int(np.prod(shape))
    return lcg_gaussian(int(seed) & ((1 << 64) - 1), n).reshape(shape)


def add_gaussian_noise(x: ImageTensor, percent: float, seed: int) -> ImageTensor:
    """Add zero-mean Gaussian noise with std = percent/100 of peak 1.0."""
    if percent == 0.0:
        return x
    sigma = percent / 100.0
    return ImageTensor(x.data + sigma * gaussian_field(seed, x.shape))
