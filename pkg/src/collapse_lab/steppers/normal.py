"""Normally distributed steps, as induced by random-matrix evolution."""

import numpy as np

from .base import _BaseStepper


class _NormalStepper(_BaseStepper):
    """Centered normal steps with standard deviation ``magnitude``."""

    name = "normal"

    def draw(
        self, rng: np.random.Generator, size, magnitude: float
    ) -> np.ndarray:
        return rng.normal(0.0, magnitude, size)

    def variance(self, magnitude: float) -> float:
        return magnitude**2

    def crossing_probability(
        self, gap_start: np.ndarray, gap_end: np.ndarray, magnitude: float
    ) -> np.ndarray:
        # Brownian bridge between the two endpoints
        if magnitude == 0.0:
            return np.zeros(np.shape(gap_start))
        gap_start = np.maximum(gap_start, 0.0)
        gap_end = np.maximum(gap_end, 0.0)
        return np.exp(-2.0 * gap_start * gap_end / magnitude**2)
