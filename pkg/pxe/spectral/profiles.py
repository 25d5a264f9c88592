"""Lateral data profiles used as initial conditions and sources"""

from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import fft as sfft

from ..core.errors import ConfigError
from .lateral_grid import Field, LateralGrid


def _offset_phase(grid: LateralGrid) -> np.ndarray:
    """exp(i xi_k . x_0) with x_0 the first cell center on every axis"""
    x0 = grid.axis[0]
    phase = np.zeros(grid.shape)
    for k in grid.frequency_mesh:
        phase = phase + k * x0
    return np.exp(1j * phase)


def synthesize_modes(grid: LateralGrid, indices: Tuple[np.ndarray, ...], coefficients: np.ndarray) -> np.ndarray:
    """Samples of sum_k a_k exp(i xi_k . x) for integer wave indices below Nyquist"""
    raw = np.zeros(grid.shape, dtype=complex)
    raw[tuple(idx % grid.points for idx in indices)] = coefficients
    return sfft.ifftn(raw * grid.size * _offset_phase(grid))


def mode_profile(grid: LateralGrid, k: Any, amplitude: complex = 1.0) -> np.ndarray:
    """Pure Fourier mode exp(i xi . x) with integer wave indices k"""
    indices = np.atleast_1d(np.asarray(k, dtype=float))
    if indices.size == 1 and grid.dimension == 2:
        indices = np.array([indices[0], 0.0])
    if indices.size != grid.dimension:
        raise ConfigError(f"mode index {k} does not match dimension {grid.dimension}")
    phase = sum(2 * np.pi * kj / grid.length * x for kj, x in zip(indices, grid.mesh))
    return amplitude * np.exp(1j * phase)


def gaussian_profile(grid: LateralGrid, width: float = 0.3, center: Any = 0.0) -> np.ndarray:
    """Real Gaussian bump exp(-|x - x0|^2 / (2 w^2))"""
    centers = np.broadcast_to(np.asarray(center, dtype=float), (grid.dimension,))
    r2 = sum((x - c) ** 2 for x, c in zip(grid.mesh, centers))
    return np.exp(-r2 / (2.0 * width ** 2))


def band_limited_profile(
    grid: LateralGrid,
    xi_max: float,
    rng: np.random.Generator,
    real: bool = True,
) -> np.ndarray:
    """
    Random field whose Fourier support is |xi| <= xi_max

    Coefficients are drawn on the integer modes |k| <= xi_max L / (2 pi) only, so
    the same seed produces the same continuum function at every resolution
    that resolves the band.

    Args:
        grid: Target grid
        xi_max: Band limit (angular frequency)
        rng: Seeded random generator
        real: Keep the real part only

    Returns:
        Samples normalized to unit continuum L^2 norm
    """
    kmax = int(np.floor(xi_max * grid.length / (2 * np.pi)))
    if kmax < 1 or kmax >= grid.points // 2:
        raise ConfigError(f"band limit {xi_max} is not resolved by {grid.points} points")

    side = 2 * kmax + 1
    shape = (side,) * grid.dimension
    draws = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    ks = np.arange(-kmax, kmax + 1)
    kmesh = np.meshgrid(*([ks] * grid.dimension), indexing="ij")
    draws = np.where(sum(k ** 2 for k in kmesh) <= kmax ** 2, draws, 0.0)

    values = synthesize_modes(grid, tuple(kmesh), draws)
    if real:
        values = values.real
    # exact for band-limited samples
    norm = np.sqrt(grid.cell_measure * np.sum(np.abs(values) ** 2))
    return values / norm


def profile_from_spec(grid: LateralGrid, spec: Optional[Dict[str, Any]], rng: np.random.Generator) -> np.ndarray:
    """Build lateral samples from a data spec block"""
    spec = spec or {"kind": "zero"}
    kind = spec.get("kind", "zero")
    amplitude = complex(spec.get("amplitude", 1.0))
    if kind == "zero":
        return np.zeros(grid.shape, dtype=complex)
    if kind == "mode":
        return mode_profile(grid, spec.get("k", 1), amplitude)
    if kind == "gaussian":
        return amplitude * gaussian_profile(grid, float(spec.get("width", 0.3)), spec.get("center", 0.0))
    if kind == "band_limited":
        xi_max = float(spec.get("xi_max", 2 * np.pi * float(spec.get("kmax", 4)) / grid.length))
        return amplitude * band_limited_profile(grid, xi_max, rng, real=bool(spec.get("real", True)))
    raise ConfigError(f"Unknown data kind '{kind}'")


def random_band_limited_field(grid: LateralGrid, kmax: int, seed: int, real: bool = False) -> Field:
    """Seeded band-limited field with |k| <= kmax, unit L^2 norm"""
    rng = np.random.default_rng(seed)
    xi_max = 2 * np.pi * (kmax + 0.5) / grid.length
    return Field(grid, band_limited_profile(grid, xi_max, rng, real=real))
