"""Steps of fixed length and random sign."""

import numpy as np

from .base import _BaseStepper


class _FixedStepper(_BaseStepper):
    """Steps of ``+magnitude`` or ``-magnitude`` with equal probability."""

    name = "fixed"
    lattice = True

    def draw(
        self, rng: np.random.Generator, size, magnitude: float
    ) -> np.ndarray:
        return np.where(rng.random(size) < 0.5, -magnitude, magnitude)

    def variance(self, magnitude: float) -> float:
        return magnitude**2
