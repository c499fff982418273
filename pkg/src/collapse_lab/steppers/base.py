"""Defines the interface of a walk step distribution."""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import abc  # for the _BaseStepper abstract base class

import numpy as np


class _BaseStepper(metaclass=abc.ABCMeta):
    """Draws the iid step components of the manifold walk."""

    name: str = ""
    # whether positions stay on the lattice start + k * magnitude
    lattice: bool = False

    @abc.abstractmethod
    def draw(
        self, rng: np.random.Generator, size, magnitude: float
    ) -> np.ndarray:
        """Draw ``size`` steps of the given magnitude from ``rng``."""

    @abc.abstractmethod
    def variance(self, magnitude: float) -> float:
        """Variance of a single step of the given magnitude."""

    def crossing_probability(
        self, gap_start: np.ndarray, gap_end: np.ndarray, magnitude: float
    ) -> np.ndarray:
        """Chance that a step between two points ``gap_start`` and ``gap_end``
        short of a barrier touched it on the way. Lattice walks land on the
        barrier itself, so they never cross it unseen."""
        return np.zeros(np.shape(gap_start))

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"
