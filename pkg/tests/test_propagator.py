"""Tests for the Cayley step, depth evolution and the mild solution"""

import numpy as np
import pytest
import scipy.linalg as sla

from pxe.core.errors import ConfigError, MeshAlignmentError
from pxe.evolution.propagator import (
    EvolutionConfig,
    OperatorCache,
    check_evolution_property,
    convergence_study,
    evolve,
    frozen_step,
    group_mild_solve,
    mild_solve,
    stationary_mild_solve,
)
from pxe.medium.presets import medium_from_spec
from pxe.operators.generator import FrozenOperator, dense_matrix
from pxe.spectral.lateral_grid import Field, LateralGrid
from pxe.spectral.profiles import mode_profile, random_band_limited_field


def cayley_factor(mu: float, zeta: float) -> complex:
    return (1 + 0.5j * zeta * mu) / (1 - 0.5j * zeta * mu)


class TestEvolutionConfig:
    """Depth discretization settings"""

    @pytest.mark.parametrize("kwargs", [
        {"depth_end": 0.0},
        {"macro_steps": 0},
        {"micro_substeps": 0},
        {"quadrature": "simpson"},
        {"solver_tol": 1e-3},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            EvolutionConfig(**kwargs)

    def test_mesh(self):
        cfg = EvolutionConfig(depth_end=2.0, macro_steps=4, micro_substeps=3)
        assert cfg.macro_step == 0.5
        assert cfg.micro_step == pytest.approx(1 / 6)
        assert list(cfg.macro_nodes) == [0.0, 0.5, 1.0, 1.5, 2.0]
        assert cfg.is_macro_node(1.5)
        assert not cfg.is_macro_node(0.7)


class TestFrozenStep:
    """Cayley approximation of exp(i zeta A)"""

    def test_zero_step_is_identity(self, rough_medium, plane_grid, band_field):
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, plane_grid)
        v = band_field(0)
        assert np.array_equal(frozen_step(op, 0.0, v).values, v.values)

    def test_unitary(self, rough_medium, plane_grid, band_field):
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, plane_grid)
        for seed in range(3):
            v = band_field(seed, kmax=6)
            assert frozen_step(op, 0.1, v).l2_norm() == pytest.approx(v.l2_norm(), rel=1e-8)

    def test_constant_medium_mode(self, constant_medium, line_grid):
        op = FrozenOperator.freeze(constant_medium, 0.0, 0.0, line_grid)
        v = Field(line_grid, mode_profile(line_grid, 2))
        out = frozen_step(op, 0.3, v)
        expected = cayley_factor(-4.0, 0.3) * v.values
        assert np.max(np.abs(out.values - expected)) <= 1e-9

    def test_non_finite_step(self, constant_medium, line_grid):
        op = FrozenOperator.freeze(constant_medium, 0.0, 0.0, line_grid)
        with pytest.raises(ValueError):
            frozen_step(op, float("nan"), Field.zeros(line_grid))

    def test_third_order_local_error(self):
        grid = LateralGrid(1, 16, 4.0)
        medium = medium_from_spec({"preset": "example-half"}, length=grid.length)
        op = FrozenOperator.freeze(medium, 0.0, 1.0, grid)
        matrix = dense_matrix(op)
        v = random_band_limited_field(grid, 2, seed=3)

        def local_error(zeta: float) -> float:
            step = frozen_step(op, zeta, v, solver_tol=1e-13).values.ravel()
            exact = sla.expm(1j * zeta * matrix) @ v.values.ravel()
            return float(np.linalg.norm(step - exact))

        ratio = local_error(1e-3) / local_error(5e-4)
        assert 7.0 <= ratio <= 9.0


class TestEvolve:
    """Depth evolution on the micro mesh"""

    def test_unitarity(self, rough_medium, plane_grid, band_field):
        cfg = EvolutionConfig(depth_end=1.0, macro_steps=16, micro_substeps=2)
        v = band_field(1, kmax=5)
        final, trace = evolve(rough_medium, 1.0, 0.0, 1.0, v, cfg)
        assert final.l2_norm() == pytest.approx(v.l2_norm(), rel=1e-6)
        assert trace.max_drift() <= 1e-6
        assert len(trace.records) == 16

    @pytest.mark.slow
    def test_unitarity_fine_mesh(self, rough_medium):
        grid = LateralGrid(2, 64, 4.0)
        cfg = EvolutionConfig(depth_end=1.0, macro_steps=64, micro_substeps=1)
        for seed in range(10):
            v = random_band_limited_field(grid, 8, seed)
            final, _ = evolve(rough_medium, 1.0, 0.0, 1.0, v, cfg)
            assert final.l2_norm() == pytest.approx(v.l2_norm(), rel=1e-6)

    def test_constant_medium_exact(self, constant_medium, line_grid):
        cfg = EvolutionConfig(depth_end=1.0, macro_steps=4, micro_substeps=3)
        v = Field(line_grid, mode_profile(line_grid, 1))
        final, _ = evolve(constant_medium, 0.0, 0.0, 1.0, v, cfg)
        expected = cayley_factor(-1.0, cfg.micro_step) ** 12 * v.values
        assert np.max(np.abs(final.values - expected)) <= 1e-9

    def test_frozen_at_left_node(self, drifting_medium, plane_grid, band_field, short_evolution):
        _, trace = evolve(drifting_medium, 1.0, 0.25, 0.75, band_field(0), short_evolution)
        assert [r.frozen_at for r in trace.records] == [0.25, 0.375, 0.5, 0.625]
        assert trace.records[-1].z == pytest.approx(0.75)

    def test_empty_interval(self, rough_medium, band_field, short_evolution):
        v = band_field(2)
        final, trace = evolve(rough_medium, 1.0, 0.5, 0.5, v, short_evolution)
        assert np.array_equal(final.values, v.values)
        assert trace.records == []

    def test_interval_order(self, rough_medium, band_field, short_evolution):
        with pytest.raises(ValueError):
            evolve(rough_medium, 1.0, 0.6, 0.4, band_field(0), short_evolution)
        with pytest.raises(ValueError):
            evolve(rough_medium, 1.0, 0.0, 2.0, band_field(0), short_evolution)

    def test_cache_reuse(self, drifting_medium, plane_grid, band_field, short_evolution):
        cache = OperatorCache(drifting_medium, 1.0, plane_grid, short_evolution)
        first, _ = evolve(drifting_medium, 1.0, 0.0, 0.5, band_field(3), short_evolution, cache)
        second, _ = evolve(drifting_medium, 1.0, 0.0, 0.5, band_field(3), short_evolution, cache)
        assert np.array_equal(first.values, second.values)

    def test_evolution_property(self, drifting_medium, band_field, short_evolution):
        for z2 in (0.25, 0.5):
            defect = check_evolution_property(drifting_medium, 1.0, 1.0, z2, 0.0, band_field(4), short_evolution)
            assert defect <= 10 * short_evolution.macro_steps * short_evolution.solver_tol

    def test_evolution_property_needs_mesh_node(self, drifting_medium, band_field, short_evolution):
        with pytest.raises(MeshAlignmentError):
            check_evolution_property(drifting_medium, 1.0, 1.0, 0.3, 0.0, band_field(4), short_evolution)


class TestMildSolve:
    """Duhamel formula with midpoint quadrature"""

    def test_homogeneous_matches_evolve(self, rough_medium, band_field, short_evolution):
        v = band_field(5)
        trajectory, _ = mild_solve(rough_medium, 1.0, v, None, short_evolution)
        final, _ = evolve(rough_medium, 1.0, 0.0, 1.0, v, short_evolution)
        assert len(trajectory) == short_evolution.macro_steps + 1
        assert [f.z for f in trajectory] == pytest.approx(list(short_evolution.macro_nodes))
        assert np.max(np.abs(trajectory[-1].values - final.values)) <= 1e-12

    def test_source_against_closed_form(self, constant_medium, line_grid):
        cfg = EvolutionConfig(depth_end=1.0, macro_steps=32, micro_substeps=1)
        mode = mode_profile(line_grid, 1)
        trajectory, _ = mild_solve(constant_medium, 0.0, Field.zeros(line_grid), lambda rho: mode, cfg)
        mu = -1.0
        expected = (np.exp(1j * mu) - 1) / (1j * mu) * mode
        error = np.max(np.abs(trajectory[-1].values - expected))
        assert error <= 1e-3 * np.max(np.abs(expected))

    def test_zero_data_stays_zero(self, rough_medium, plane_grid, short_evolution):
        trajectory, trace = mild_solve(
            rough_medium, 1.0, Field.zeros(plane_grid), lambda rho: np.zeros(plane_grid.shape), short_evolution
        )
        assert all(not np.any(f.values) for f in trajectory)
        assert trace.total_iterations == 0

    def test_stationary_solve_integrates_source(self, line_grid):
        cfg = EvolutionConfig(depth_end=1.0, macro_steps=4, micro_substeps=3)
        v0 = Field(line_grid, mode_profile(line_grid, 2))
        mode = mode_profile(line_grid, 1)
        trajectory, trace = stationary_mild_solve(0.0, v0, lambda rho: rho * mode, cfg)
        assert [f.z for f in trajectory] == pytest.approx(list(cfg.macro_nodes))
        assert np.allclose(trajectory[-1].values, v0.values + 0.5 * mode, atol=1e-12)
        assert trace.total_iterations == 0
        assert [r.frozen_at for r in trace.records] == [0.0, 0.25, 0.5, 0.75]

    def test_group_mild_solve(self, constant_medium, line_grid):
        op = FrozenOperator.freeze(constant_medium, 0.0, 0.0, line_grid)
        mode = mode_profile(line_grid, 1)
        trajectory = group_mild_solve(op, Field.zeros(line_grid), lambda rho: mode, 1.0, 32)
        expected = (np.exp(-1j) - 1) / (-1j) * mode
        assert len(trajectory) == 33
        assert np.max(np.abs(trajectory[-1].values - expected)) <= 1e-3 * np.max(np.abs(expected))

    def test_group_mild_solve_arguments(self, constant_medium, line_grid):
        op = FrozenOperator.freeze(constant_medium, 0.0, 0.0, line_grid)
        with pytest.raises(ValueError):
            group_mild_solve(op, Field.zeros(line_grid), None, 1.0, 0)


class TestConvergence:
    """Self-convergence in the number of macro intervals"""

    def test_depth_independent_medium_is_exact(self, rough_medium, band_field):
        cfg = EvolutionConfig(depth_end=1.0, macro_steps=4, micro_substeps=1)
        report = convergence_study(rough_medium, 1.0, band_field(0), cfg, [2, 4, 8])
        assert report.exact
        assert report.order_label == "exact"
        assert report.micro_steps == 8
        assert report.mesh == "shared"

    @pytest.mark.parametrize("n_list", [[3, 5, 7], [3, 7, 11, 13, 17]])
    def test_non_divisible_counts_use_reference_run(self, drifting_medium, n_list):
        grid = LateralGrid(2, 16, 4.0)
        cfg = EvolutionConfig(depth_end=1.0, macro_steps=4, micro_substeps=2)
        v = random_band_limited_field(grid, 3, seed=2)
        report = convergence_study(drifting_medium, 1.0, v, cfg, n_list)
        assert report.mesh == "reference"
        assert report.n_values == n_list
        assert report.micro_steps == 2 * n_list[-1]
        assert len(report.differences) == len(n_list) - 1
        assert all(np.isfinite(d) and d > 0 for d in report.differences)
        assert report.to_dict()["mesh"] == "reference"

    def test_n_list_validation(self, rough_medium, band_field, short_evolution):
        with pytest.raises(ValueError):
            convergence_study(rough_medium, 1.0, band_field(0), short_evolution, [8])
        with pytest.raises(ValueError):
            convergence_study(rough_medium, 1.0, band_field(0), short_evolution, [8, 4])

    @pytest.mark.slow
    def test_first_order_for_drifting_medium(self, plane_grid):
        medium = medium_from_spec({"preset": "example-drifting"}, length=plane_grid.length)
        cfg = EvolutionConfig(depth_end=1.0, macro_steps=8, micro_substeps=1)
        v = random_band_limited_field(plane_grid, 4, seed=0)
        report = convergence_study(medium, 1.0, v, cfg, [8, 16, 32, 64])
        assert not report.exact
        assert report.monotone
        assert 0.8 <= report.order <= 1.2
