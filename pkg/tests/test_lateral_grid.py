"""Tests for the lateral grid, Fourier transforms, derivatives and Sobolev norms"""

import numpy as np
import pytest

from pxe.core.errors import StructuralError
from pxe.medium.medium import build_example_medium
from pxe.spectral.lateral_grid import (
    Field,
    LateralGrid,
    fourier_forward,
    fourier_inverse,
    gradient,
    project_band,
    sobolev_norm,
    sobolev_spectrum,
    spectral_derivative,
)
from pxe.spectral.profiles import mode_profile, random_band_limited_field


class TestLateralGrid:
    """Grid construction and frequency tables"""

    def test_spacing_times_points_is_length(self):
        grid = LateralGrid(2, 64, 4.0)
        assert grid.spacing * grid.points == grid.length
        assert grid.shape == (64, 64)
        assert grid.size == 4096
        assert grid.volume == 16.0

    def test_cell_centered_axis_avoids_origin(self):
        grid = LateralGrid(1, 8, 2.0)
        assert np.all(grid.axis != 0.0)
        assert grid.axis[0] == pytest.approx(-1.0 + 0.125)

    def test_frequency_table_antisymmetric(self):
        grid = LateralGrid(1, 16, 3.0)
        table = grid.frequency_table
        half = grid.points // 2
        for k in range(1, half):
            assert table[half + k] == pytest.approx(-table[half - k])
        assert table[0] == pytest.approx(-grid.xi_nyquist)

    @pytest.mark.parametrize("points", [4, 12, 100])
    def test_rejects_bad_point_counts(self, points):
        with pytest.raises(StructuralError):
            LateralGrid(1, points, 1.0)

    def test_rejects_bad_dimension_and_length(self):
        with pytest.raises(StructuralError):
            LateralGrid(3, 16, 1.0)
        with pytest.raises(StructuralError):
            LateralGrid(1, 16, 0.0)

    def test_laplace_symbol_nonpositive_with_nyquist_removed(self):
        grid = LateralGrid(2, 16, 2 * np.pi)
        assert np.all(grid.laplace_symbol <= 0)
        assert grid.laplace_symbol[8, 0] == 0.0
        assert grid.laplace_symbol[1, 2] == pytest.approx(-5.0)


class TestField:
    """Field construction and arithmetic"""

    def test_shape_mismatch(self, line_grid):
        with pytest.raises(StructuralError):
            Field(line_grid, np.zeros(15))

    def test_flat_values_reshaped(self, plane_grid):
        f = Field(plane_grid, np.ones(plane_grid.size))
        assert f.values.shape == plane_grid.shape

    def test_non_finite_rejected(self, line_grid):
        values = np.zeros(16)
        values[3] = np.nan
        with pytest.raises(StructuralError):
            Field(line_grid, values)

    def test_negative_depth_rejected(self, line_grid):
        with pytest.raises(StructuralError):
            Field(line_grid, np.zeros(16), z=-0.1)

    def test_grid_mismatch_in_arithmetic(self, line_grid, plane_grid):
        with pytest.raises(StructuralError):
            Field.zeros(line_grid) + Field.zeros(LateralGrid(1, 32, 2 * np.pi))


class TestFourier:
    """Unitary transform pair"""

    def test_constant_field_has_only_dc_mode(self):
        grid = LateralGrid(1, 8, 1.0)
        spectrum = fourier_forward(Field(grid, np.ones(8)))
        nonzero = np.flatnonzero(np.abs(spectrum.coefficients) > 1e-12)
        assert list(nonzero) == [0]

    def test_pure_mode_has_single_coefficient(self, line_grid):
        spectrum = fourier_forward(Field(line_grid, mode_profile(line_grid, 1)))
        nonzero = np.flatnonzero(np.abs(spectrum.coefficients) > 1e-10)
        assert list(nonzero) == [1]

    def test_round_trip(self, plane_grid):
        rng = np.random.default_rng(7)
        values = rng.standard_normal(plane_grid.shape) + 1j * rng.standard_normal(plane_grid.shape)
        f = Field(plane_grid, values)
        back = fourier_inverse(fourier_forward(f))
        assert np.linalg.norm(back.values - values) <= 1e-12 * np.linalg.norm(values)

    def test_parseval(self, plane_grid):
        f = random_band_limited_field(plane_grid, 5, seed=3)
        assert fourier_forward(f).l2_norm() == pytest.approx(f.l2_norm(), rel=1e-13)

    def test_real_flag_drops_roundoff(self, plane_grid):
        f = random_band_limited_field(plane_grid, 4, seed=1, real=True)
        assert fourier_inverse(fourier_forward(f), real=True).is_real


class TestSpectralDerivative:
    """Multiplication by i xi"""

    def test_sine_derivative(self):
        grid = LateralGrid(1, 32, 4.0)
        xi = 2 * np.pi * 3 / grid.length
        f = Field(grid, np.sin(xi * grid.axis))
        df = spectral_derivative(f, 0)
        assert np.max(np.abs(df.values - xi * np.cos(xi * grid.axis))) <= 1e-10 * xi

    def test_constant_goes_to_zero(self, plane_grid):
        f = Field(plane_grid, np.full(plane_grid.shape, 2.5))
        for component in gradient(f):
            assert np.max(np.abs(component.values)) <= 1e-12

    def test_real_stays_real(self, plane_grid):
        f = random_band_limited_field(plane_grid, 4, seed=2, real=True)
        assert spectral_derivative(f, 1).is_real

    def test_axis_out_of_range(self, line_grid):
        with pytest.raises(StructuralError):
            spectral_derivative(Field.zeros(line_grid), 1)


class TestSobolev:
    """Discrete H^s norms"""

    @pytest.mark.parametrize("s", [-2.0, 0.0, 1.0, 3.5])
    def test_constant_field(self, plane_grid, s):
        f = Field(plane_grid, np.full(plane_grid.shape, 3.0))
        assert sobolev_norm(f, s) == pytest.approx(3.0 * plane_grid.length, rel=1e-12)

    def test_single_mode(self, plane_grid):
        f = Field(plane_grid, mode_profile(plane_grid, 1))
        xi = 2 * np.pi / plane_grid.length
        expected = plane_grid.length * np.sqrt(1 + xi ** 2)
        assert sobolev_norm(f, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_zero_order_is_l2(self, plane_grid):
        f = random_band_limited_field(plane_grid, 6, seed=4)
        assert sobolev_norm(f, 0.0) == pytest.approx(f.l2_norm(), rel=1e-12)

    def test_monotone_in_order(self, plane_grid):
        f = random_band_limited_field(plane_grid, 6, seed=5)
        assert sobolev_norm(f, 2) >= sobolev_norm(f, 1) >= sobolev_norm(f, 0)

    def test_order_outside_supported_range(self, plane_grid):
        with pytest.raises(ValueError):
            sobolev_norm(Field.zeros(plane_grid), 4.5)

    def test_spectrum_report(self, plane_grid):
        f = Field(plane_grid, mode_profile(plane_grid, 2))
        report = sobolev_spectrum(f, [2.0, 0.0, 1.0])
        xi2 = (2 * 2 * np.pi / plane_grid.length) ** 2
        assert report.orders == [0.0, 1.0, 2.0]
        for s, norm in report.entries:
            assert norm == pytest.approx(plane_grid.length * (1 + xi2) ** (s / 2), rel=1e-12)
        assert report.is_monotone()

    def test_constant_spectrum_is_flat(self, plane_grid):
        f = Field(plane_grid, np.ones(plane_grid.shape))
        norms = sobolev_spectrum(f, [0, 1, 2]).norms
        assert norms[1] == pytest.approx(norms[0])
        assert norms[2] == pytest.approx(norms[0])

    def test_report_serializes_as_array(self, plane_grid):
        f = Field(plane_grid, np.ones(plane_grid.shape))
        data = sobolev_spectrum(f, [1.0, 0.0]).to_list()
        assert [entry["s"] for entry in data] == [0.0, 1.0]
        assert data[0]["norm"] == pytest.approx(plane_grid.length)

    def test_rough_coefficient_diverges_above_critical_order(self):
        # alpha = 0.5 in 2-D lies in H^s exactly for s < 1.5
        norms = {}
        for points in (64, 256):
            grid = LateralGrid(2, points, 4.0)
            medium = build_example_medium(1.0, 1.0, 0.5, 0.5, 1.5, length=grid.length)
            f = Field(grid, medium.terms[0].coefficient.values(0.0, grid))
            norms[points] = dict(sobolev_spectrum(f, [1.0, 1.6]).entries)
        assert norms[256][1.6] > 1.03 * norms[64][1.6]
        assert norms[256][1.0] == pytest.approx(norms[64][1.0], rel=0.02)

    def test_empty_order_list(self, plane_grid):
        with pytest.raises(ValueError):
            sobolev_spectrum(Field.zeros(plane_grid), [])

    def test_band_restriction(self, plane_grid):
        f = Field(plane_grid, mode_profile(plane_grid, 5))
        assert sobolev_norm(f, 2.0, band=1.0) == 0.0


class TestProfiles:
    """Resolution-independent data"""

    def test_projection_keeps_band(self, plane_grid):
        f = random_band_limited_field(plane_grid, 3, seed=8)
        projected = project_band(f, 2 * np.pi * 4 / plane_grid.length)
        assert np.max(np.abs(projected.values - f.values)) <= 1e-12

    def test_band_limited_data_is_resolution_independent(self):
        coarse = random_band_limited_field(LateralGrid(2, 32, 4.0), 4, seed=9)
        fine = random_band_limited_field(LateralGrid(2, 64, 4.0), 4, seed=9)
        for s in (0.0, 1.0, 2.0):
            assert sobolev_norm(fine, s) == pytest.approx(sobolev_norm(coarse, s), rel=1e-10)
