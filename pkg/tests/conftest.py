"""Shared fixtures for the pxe test suite"""

import numpy as np
import pytest

from pxe.evolution.propagator import EvolutionConfig
from pxe.medium.medium import Medium, build_example_medium
from pxe.spectral.lateral_grid import LateralGrid
from pxe.spectral.profiles import random_band_limited_field


@pytest.fixture
def line_grid():
    """d = 1, N = 16 on a 2 pi period so xi_k = k"""
    return LateralGrid(1, 16, 2 * np.pi)


@pytest.fixture
def plane_grid():
    return LateralGrid(2, 32, 4.0)


@pytest.fixture
def constant_medium():
    return Medium(c0=1.0, name="constant")


@pytest.fixture
def rough_medium():
    """Example medium with alpha = 0.5, no regularization"""
    return build_example_medium(1.0, 1.0, 0.5, 0.5, 1.5, length=4.0, name="rough")


@pytest.fixture
def smooth_medium():
    return build_example_medium(1.0, 1.0, 1.0, 0.5, 1.5, regularize_eps=0.2, length=4.0, name="smooth")


@pytest.fixture
def drifting_medium():
    """C^1 in z: chi0(z) = 1 + z / 2"""
    return build_example_medium(
        1.0, lambda z: 1.0 + 0.5 * z, 0.5, 0.5, 1.5,
        chi0_dz=lambda z: 0.5, alpha_dz=lambda z: 0.0,
        length=4.0, name="drifting",
    )


@pytest.fixture
def short_evolution():
    return EvolutionConfig(depth_end=1.0, macro_steps=8, micro_substeps=2)


@pytest.fixture
def band_field(plane_grid):
    """Seeded band-limited field factory on the plane grid"""
    def make(seed: int, kmax: int = 3, real: bool = False):
        return random_band_limited_field(plane_grid, kmax, seed, real=real)
    return make
