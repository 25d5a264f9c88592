"""Tests for Fourier-tail regularity estimates and the product rule"""

import math

import numpy as np
import pytest

from pxe.analysis.estimators import (
    estimate_sobolev_exponent,
    fact_a_exponent,
    prescribed_regularity_field,
    product_regularity_check,
    shell_spectrum,
)
from pxe.core.errors import StructuralError
from pxe.medium.medium import build_example_medium
from pxe.spectral.lateral_grid import Field, LateralGrid


def coefficient_field(alpha: float, points: int) -> Field:
    grid = LateralGrid(2, points, 4.0)
    medium = build_example_medium(1.0, 1.0, alpha, 0.5, 1.5, length=grid.length)
    return Field(grid, medium.terms[0].coefficient.values(0.0, grid))


class TestShellSpectrum:
    """Shell averages of |F|^2"""

    def test_counts_cover_all_modes(self, plane_grid, band_field):
        _, _, counts = shell_spectrum(band_field(0))
        assert counts.sum() == plane_grid.size

    def test_energy_matches_norm(self, band_field):
        f = band_field(1, kmax=5)
        _, means, counts = shell_spectrum(f)
        assert np.sum(means * counts) == pytest.approx(f.l2_norm() ** 2, rel=1e-12)


class TestEstimate:
    """Power-law fits of the spectral tail"""

    @pytest.mark.slow
    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_example_coefficient_exponent(self, alpha):
        estimate = estimate_sobolev_exponent(coefficient_field(alpha, 256))
        assert estimate.status == "ok"
        assert estimate.exponent == pytest.approx(1.0 + alpha, abs=0.15)

    def test_prescribed_field(self):
        grid = LateralGrid(2, 128, 4.0)
        f = prescribed_regularity_field(grid, 0.5, np.random.default_rng(0))
        estimate = estimate_sobolev_exponent(f)
        assert estimate.status == "ok"
        assert estimate.exponent == pytest.approx(0.55, abs=0.15)
        assert f.l2_norm() == pytest.approx(1.0)

    def test_analytic_periodic_is_smooth(self):
        grid = LateralGrid(2, 64, 4.0)
        values = np.exp(sum(np.cos(2 * np.pi * x / grid.length) for x in grid.mesh))
        estimate = estimate_sobolev_exponent(Field(grid, values))
        assert estimate.status == "smooth"
        assert estimate.reliable

    def test_scale_invariance(self):
        f = prescribed_regularity_field(LateralGrid(2, 64, 4.0), 0.8, np.random.default_rng(3))
        first = estimate_sobolev_exponent(f)
        second = estimate_sobolev_exponent(f * 3.0)
        assert second.exponent == pytest.approx(first.exponent, abs=1e-9)

    def test_zero_field_is_unreliable(self, plane_grid):
        estimate = estimate_sobolev_exponent(Field.zeros(plane_grid))
        assert estimate.status == "unreliable"
        assert not estimate.reliable
        assert estimate.to_dict()["exponent"] is None

    def test_narrow_band_is_unreliable(self):
        f = prescribed_regularity_field(LateralGrid(2, 64, 4.0), 0.8, np.random.default_rng(0))
        xi = 2 * np.pi / 4.0
        estimate = estimate_sobolev_exponent(f, fit_range=(10 * xi, 14 * xi))
        assert estimate.status == "unreliable"


class TestProductRule:
    """Exponent of a product of Sobolev functions on the plane"""

    @pytest.mark.parametrize("s1, s2, expected", [
        (0.8, 0.8, 0.6),
        (2.0, 0.5, 0.5),
        (math.inf, 0.7, 0.7),
        (1.0, 0.5, 0.375),
        (0.5, -0.5, -1.125),
    ])
    def test_exponent(self, s1, s2, expected):
        assert fact_a_exponent(s1, s2) == pytest.approx(expected)

    def test_never_above_either_factor(self):
        for s1 in np.linspace(0.1, 3.0, 13):
            for s2 in np.linspace(0.1, 3.0, 13):
                assert fact_a_exponent(s1, s2) <= min(s1, s2)

    def test_negative_sum(self):
        with pytest.raises(ValueError):
            fact_a_exponent(0.2, -0.5)

    def test_random_products(self):
        report = product_regularity_check(0.8, 0.8, 5, LateralGrid(2, 128, 4.0), workers=2)
        assert report.predicted == pytest.approx(0.6)
        assert report.passed
        assert [t.seed for t in report.trials] == [0, 1, 2, 3, 4]

    def test_smooth_factor(self):
        report = product_regularity_check(math.inf, 0.6, 3, LateralGrid(2, 128, 4.0))
        assert report.to_dict()["s1"] == "smooth"
        assert report.passed

    @pytest.mark.slow
    @pytest.mark.parametrize("s1, s2", [(0.8, 0.8), (2.0, 0.5), (0.5, 0.5), (1.5, 0.9), (math.inf, 0.7)])
    def test_twenty_trials(self, s1, s2):
        report = product_regularity_check(s1, s2, 20, LateralGrid(2, 256, 4.0), workers=4)
        assert report.pass_fraction >= 0.8

    def test_planar_only(self):
        with pytest.raises(StructuralError):
            product_regularity_check(0.8, 0.8, 1, LateralGrid(1, 64, 4.0))
