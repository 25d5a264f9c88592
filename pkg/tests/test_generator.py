"""Tests for the frozen generator, its resolvent and the bootstrap ledger"""

from fractions import Fraction

import numpy as np
import pytest

from pxe.core.errors import LedgerDomainError, StructuralError
from pxe.operators.generator import (
    FrozenOperator,
    apply_A,
    apply_A_nondiv,
    apply_A_product_form,
    bootstrap_ledger,
    dense_matrix,
    dense_resolvent,
    ellipticity_margin,
    operator_lipschitz_estimate,
    resolvent,
    resolvent_continuity,
    solve_shifted,
    symmetry_defect,
)
from pxe.spectral.lateral_grid import Field, LateralGrid
from pxe.spectral.profiles import mode_profile, random_band_limited_field


class TestApply:
    """Divergence-form application"""

    def test_constant_medium_mode(self, line_grid):
        from pxe.medium.medium import Medium

        op = FrozenOperator.freeze(Medium(c0=2.0), 0.0, 0.0, line_grid)
        assert op.c_max == pytest.approx(2.0)
        v = Field(line_grid, mode_profile(line_grid, 3))
        out = apply_A(op, v)
        assert np.max(np.abs(out.values + 18.0 * v.values)) <= 1e-10 * 18.0

    def test_forms_agree_for_constant_medium(self, constant_medium, band_field, plane_grid):
        op = FrozenOperator.freeze(constant_medium, 0.0, 1.0, plane_grid)
        v = band_field(1)
        reference = apply_A(op, v)
        for form in (apply_A_nondiv, apply_A_product_form):
            assert (form(op, v) - reference).l2_norm() <= 1e-10 * reference.l2_norm()

    def test_forms_close_for_smooth_medium(self, smooth_medium):
        grid = LateralGrid(2, 64, 4.0)
        op = FrozenOperator.freeze(smooth_medium, 0.0, 1.0, grid)
        v = random_band_limited_field(grid, 3, seed=2)
        reference = apply_A(op, v)
        assert (apply_A_nondiv(op, v) - reference).l2_norm() <= 5e-2 * reference.l2_norm()

    def test_grid_mismatch(self, constant_medium, plane_grid, line_grid):
        op = FrozenOperator.freeze(constant_medium, 0.0, 1.0, plane_grid)
        with pytest.raises(StructuralError):
            apply_A(op, Field.zeros(line_grid))


class TestSymmetry:
    """Hermitian structure and ellipticity"""

    @pytest.mark.parametrize("medium_name", ["rough_medium", "smooth_medium"])
    def test_symmetry_defect(self, request, medium_name, plane_grid, band_field):
        medium = request.getfixturevalue(medium_name)
        op = FrozenOperator.freeze(medium, 0.0, 1.0, plane_grid)
        for seed in range(10):
            v, w = band_field(2 * seed, kmax=6), band_field(2 * seed + 1, kmax=6)
            assert symmetry_defect(op, v, w) <= 1e-10

    @pytest.mark.slow
    def test_symmetry_defect_many_pairs(self, rough_medium):
        grid = LateralGrid(2, 64, 4.0)
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, grid)
        for seed in range(100):
            v = random_band_limited_field(grid, 10, 2 * seed)
            w = random_band_limited_field(grid, 10, 2 * seed + 1)
            assert symmetry_defect(op, v, w) <= 1e-10

    def test_zero_field_defect(self, rough_medium, plane_grid, band_field):
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, plane_grid)
        assert symmetry_defect(op, Field.zeros(plane_grid), band_field(0)) == 0.0

    def test_ellipticity(self, rough_medium, plane_grid, band_field):
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, plane_grid)
        for seed in range(5):
            v = band_field(seed, kmax=5)
            assert ellipticity_margin(op, v) >= -1e-9 * v.l2_norm() ** 2


class TestDense:
    """Dense oracles on small grids"""

    def test_dense_matches_apply(self, rough_medium):
        grid = LateralGrid(2, 8, 4.0)
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, grid)
        v = random_band_limited_field(grid, 3, seed=4)
        dense = dense_matrix(op) @ v.values.ravel()
        assert np.max(np.abs(dense - apply_A(op, v).values.ravel())) <= 1e-10 * np.max(np.abs(dense))

    def test_dense_matrix_hermitian(self, rough_medium):
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, LateralGrid(2, 8, 4.0))
        matrix = dense_matrix(op)
        assert np.max(np.abs(matrix - matrix.conj().T)) <= 1e-10 * np.max(np.abs(matrix))

    def test_dense_limit(self, constant_medium):
        op = FrozenOperator.freeze(constant_medium, 0.0, 1.0, LateralGrid(2, 128, 4.0))
        with pytest.raises(StructuralError, match="dense"):
            dense_matrix(op)

    @pytest.mark.parametrize("lam", [-2.0, -0.5, 0.5, 2.0])
    def test_resolvent_matches_dense_solve(self, rough_medium, lam):
        grid = LateralGrid(2, 16, 4.0)
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, grid)
        f = random_band_limited_field(grid, 4, seed=6)
        u = resolvent(op, lam, f, solver_tol=1e-12)
        reference = dense_resolvent(op, lam, f)
        assert (u - reference).l2_norm() <= 1e-8 * reference.l2_norm()


class TestResolvent:
    """(lam - iA) u = f"""

    @pytest.mark.parametrize("lam", [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    def test_contraction_bound(self, rough_medium, plane_grid, band_field, lam):
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, plane_grid)
        for seed in range(3):
            f = band_field(seed, kmax=6)
            u = resolvent(op, lam, f)
            assert u.l2_norm() <= f.l2_norm() / abs(lam) * (1 + 1e-6)

    def test_residual_within_tolerance(self, rough_medium, plane_grid, band_field):
        op = FrozenOperator.freeze(rough_medium, 0.0, 1.0, plane_grid)
        f = band_field(3)
        u, info = solve_shifted(op, 1.0, f.values, 1e-10, 200)
        residual = f.values - (u - 1j * op.apply_values(u))
        assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(f.values) * (1 + 1e-6)
        assert info.residual <= 1e-10

    def test_zero_shift(self, constant_medium, plane_grid):
        op = FrozenOperator.freeze(constant_medium, 0.0, 1.0, plane_grid)
        with pytest.raises(ValueError):
            resolvent(op, 0.0, Field.zeros(plane_grid))

    @pytest.mark.parametrize("tol", [0.0, 1e-3])
    def test_tolerance_range(self, constant_medium, plane_grid, tol):
        op = FrozenOperator.freeze(constant_medium, 0.0, 1.0, plane_grid)
        with pytest.raises(ValueError):
            resolvent(op, 1.0, Field.zeros(plane_grid), solver_tol=tol)

    def test_continuity_along_depth(self, drifting_medium, plane_grid, band_field):
        rows = resolvent_continuity(drifting_medium, 1.0, band_field(0), [(0.0, 1.0), (0.01, 1.0), (0.1, 1.0)])
        assert rows[0]["difference"] == 0.0
        assert rows[1]["difference"] < rows[2]["difference"]

    def test_lipschitz_estimate(self, drifting_medium, constant_medium, plane_grid):
        assert operator_lipschitz_estimate(constant_medium, 1.0, 0.0, 0.5, plane_grid) == 0.0
        assert operator_lipschitz_estimate(drifting_medium, 1.0, 0.0, 0.5, plane_grid) > 0.0
        with pytest.raises(ValueError):
            operator_lipschitz_estimate(drifting_medium, 1.0, 0.2, 0.2, plane_grid)


class TestBootstrapLedger:
    """Exponent bookkeeping"""

    def test_half(self):
        ledger = bootstrap_ledger(0, Fraction(1, 2))
        assert ledger.claim1 == Fraction(1, 2)
        assert ledger.claim2_step_count == 4
        assert ledger.claim2_exponents == [Fraction(1, 2), Fraction(3, 4), 1, Fraction(5, 4), Fraction(3, 2)]
        assert ledger.claim3_step_count == 3
        assert ledger.claim3_exponents == [Fraction(3, 2), Fraction(7, 4), 2]
        assert ledger.final == 2
        assert ledger.epsilon == Fraction(1, 8)

    def test_quarter_data(self):
        ledger = bootstrap_ledger(Fraction(1, 4), Fraction(1, 2))
        assert ledger.claim2_step_count == 3
        assert ledger.claim3_step_count == 4
        assert ledger.claim3_exponents[-1] == Fraction(9, 4)

    def test_three_quarters(self):
        ledger = bootstrap_ledger(0, Fraction(3, 4))
        assert ledger.claim2_step_count == 3
        assert ledger.claim2_exponents == [Fraction(3, 4), Fraction(9, 8), Fraction(3, 2), Fraction(7, 4)]
        assert ledger.claim3_step_count == 2
        assert ledger.claim3_exponents == [Fraction(7, 4), 2]

    def test_float_inputs_guard_ceilings(self):
        ledger = bootstrap_ledger(0.0, 0.5)
        assert not ledger.exact
        assert ledger.claim2_step_count == 4
        assert ledger.claim3_step_count == 3

    def test_line_case(self):
        ledger = bootstrap_ledger(Fraction(1, 4), Fraction(1, 2), dimension=1)
        assert ledger.claim1 == Fraction(9, 4)
        assert ledger.claim2_steps == []

    def test_serialization(self):
        data = bootstrap_ledger(0, Fraction(1, 2)).to_dict()
        assert data["r"] == "1/2"
        assert data["final"] == 2
        assert data["claim2_steps"][1] == {"j": 1, "exponent": "3/4", "t": "1/4", "r_j": 1}

    @pytest.mark.parametrize("s, r", [(Fraction(1, 2), Fraction(1, 2)), (0, 1), (-0.1, 0.5), (0.6, 0.5)])
    def test_domain(self, s, r):
        with pytest.raises(LedgerDomainError):
            bootstrap_ledger(s, r)

    def test_dimension(self):
        with pytest.raises(LedgerDomainError):
            bootstrap_ledger(0, Fraction(1, 2), dimension=3)
