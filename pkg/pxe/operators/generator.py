"""Frozen-parameter operator A(tau; z) v = div(c grad v), its resolvent and regularity ledger"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy import linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from ..core.errors import LedgerDomainError, SolverConvergenceError, StructuralError
from ..core.logger import logger
from ..medium.medium import Medium, evaluate_c, evaluate_grad_c
from ..spectral.lateral_grid import Field, LateralGrid, derivative_values, sobolev_norm

DENSE_LIMIT = 4096
REFINEMENT_SWEEPS = 4

Number = Union[int, float, Fraction]


@dataclass(frozen=True, eq=False)
class FrozenOperator:
    """A(tau; z) with cached coefficient and gradient samples"""
    medium: Medium
    z: float
    tau: float
    grid: LateralGrid
    c: np.ndarray
    grad_c: Tuple[np.ndarray, ...]

    @classmethod
    def freeze(
        cls, medium: Medium, z: float, tau: float, grid: LateralGrid, gradient_route: str = "auto"
    ) -> "FrozenOperator":
        c = evaluate_c(medium, z, tau, grid)
        grad = evaluate_grad_c(medium, z, tau, grid, route=gradient_route)
        return cls(medium, float(z), float(tau), grid, c.values, tuple(g.values for g in grad))

    @property
    def c_mean(self) -> float:
        return float(np.mean(self.c))

    @property
    def c_max(self) -> float:
        return float(np.max(self.c))

    def check(self, v: Field) -> None:
        if v.grid != self.grid:
            raise StructuralError(f"field grid {v.grid} does not match operator grid {self.grid}")

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        """Divergence form sum_j D_j (c D_j v) on raw samples"""
        out = np.zeros(self.grid.shape, dtype=complex)
        for axis in range(self.grid.dimension):
            flux = self.c * derivative_values(self.grid, values, axis)
            out += derivative_values(self.grid, flux, axis)
        return out


def _finite(values: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise StructuralError(f"non-finite output in {where}")
    return values


def apply_A(op: FrozenOperator, v: Field) -> Field:
    """Av in divergence form: D_j, multiply by c, D_j, sum"""
    op.check(v)
    return v.with_values(_finite(op.apply_values(v.values), "apply_A"))


def apply_A_nondiv(op: FrozenOperator, v: Field) -> Field:
    """grad c . grad v + c Laplace v"""
    op.check(v)
    grid = op.grid
    out = np.zeros(grid.shape, dtype=complex)
    for axis in range(grid.dimension):
        dv = derivative_values(grid, v.values, axis)
        out += op.grad_c[axis] * dv + op.c * derivative_values(grid, dv, axis)
    return v.with_values(_finite(out, "apply_A_nondiv"))


def apply_A_product_form(op: FrozenOperator, v: Field) -> Field:
    """Laplace(c v) - div(v grad c)"""
    op.check(v)
    grid = op.grid
    cv = op.c * v.values
    out = np.zeros(grid.shape, dtype=complex)
    for axis in range(grid.dimension):
        out += derivative_values(grid, derivative_values(grid, cv, axis), axis)
        out -= derivative_values(grid, v.values * op.grad_c[axis], axis)
    return v.with_values(_finite(out, "apply_A_product_form"))


def symmetry_defect(op: FrozenOperator, v: Field, w: Field) -> float:
    """|<Av, w> - <v, Aw>| / (||v||_H1 ||w||_H1)"""
    op.check(v)
    op.check(w)
    scale = sobolev_norm(v, 1.0) * sobolev_norm(w, 1.0)
    if scale == 0:
        return 0.0
    return abs(apply_A(op, v).inner(w) - v.inner(apply_A(op, w))) / scale


def ellipticity_margin(op: FrozenOperator, v: Field) -> float:
    """Re<-Av, v> - c0 ||grad v||^2 (nonnegative for c >= c0)"""
    op.check(v)
    energy = -apply_A(op, v).inner(v).real
    gradient_sq = sum(
        op.grid.cell_measure * np.sum(np.abs(derivative_values(op.grid, v.values, axis)) ** 2)
        for axis in range(op.grid.dimension)
    )
    return float(energy - op.medium.c0 * gradient_sq)


def derivative_matrices(grid: LateralGrid) -> List[np.ndarray]:
    """Dense D_j acting on C-order flattened samples, built from explicit DFT matrices"""
    n = grid.points
    dft = sla.dft(n)
    inverse = dft.conj().T / n
    one_d = inverse @ np.diag(grid.derivative_symbol) @ dft
    if grid.dimension == 1:
        return [one_d]
    identity = np.eye(n)
    return [np.kron(one_d, identity), np.kron(identity, one_d)]


def dense_matrix(op: FrozenOperator) -> np.ndarray:
    """Dense discrete A assembled from the same derivative/multiply primitives"""
    if op.grid.size > DENSE_LIMIT:
        raise StructuralError(f"dense assembly limited to {DENSE_LIMIT} unknowns, grid has {op.grid.size}")
    multiply = np.diag(op.c.ravel())
    return sum(d @ multiply @ d for d in derivative_matrices(op.grid))


@dataclass
class SolveInfo:
    iterations: int = 0
    residual: float = 0.0
    sweeps: int = 0


def _check_shift(lam: float, solver_tol: float) -> None:
    if lam == 0 or not math.isfinite(lam):
        raise ValueError(f"resolvent shift must be real and nonzero, got {lam}")
    if not 0 < solver_tol <= 1e-6:
        raise ValueError(f"solver_tol must lie in (0, 1e-6], got {solver_tol}")


def solve_shifted(
    op: FrozenOperator,
    lam: float,
    rhs: np.ndarray,
    solver_tol: float = 1e-10,
    max_iterations: int = 200,
) -> Tuple[np.ndarray, SolveInfo]:
    """
    Solve (lam - iA) u = rhs with preconditioned GMRES plus residual-checked refinement

    Args:
        op: Frozen operator
        lam: Real nonzero shift
        rhs: Right-hand side samples
        solver_tol: Relative tolerance on the true residual
        max_iterations: GMRES iteration cap per refinement sweep

    Returns:
        Tuple of (solution samples, SolveInfo)
    """
    grid = op.grid
    shape = grid.shape
    size = grid.size
    info = SolveInfo()

    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0:
        return np.zeros(shape, dtype=complex), info

    symbol = lam - 1j * op.c_mean * grid.laplace_symbol

    def matvec(x: np.ndarray) -> np.ndarray:
        u = x.reshape(shape)
        return (lam * u - 1j * op.apply_values(u)).ravel()

    def precondition(x: np.ndarray) -> np.ndarray:
        return sfft.ifftn(sfft.fftn(x.reshape(shape)) / symbol).ravel()

    system = LinearOperator((size, size), matvec=matvec, dtype=complex)
    preconditioner = LinearOperator((size, size), matvec=precondition, dtype=complex)

    def count(_residual: float) -> None:
        info.iterations += 1

    u = precondition(rhs.ravel())
    residual = rhs.ravel() - matvec(u)
    for sweep in range(REFINEMENT_SWEEPS):
        info.sweeps = sweep + 1
        info.residual = float(np.linalg.norm(residual)) / rhs_norm
        if info.residual <= solver_tol:
            break
        # relative to the current residual, aiming at the overall target
        inner_tol = max(solver_tol * rhs_norm / np.linalg.norm(residual), 1e-14)
        correction, _ = gmres(
            system, residual,
            rtol=min(inner_tol, 0.5), atol=0.0,
            restart=min(60, size), maxiter=max_iterations,
            M=preconditioner, callback=count, callback_type="pr_norm",
        )
        u = u + correction
        residual = rhs.ravel() - matvec(u)

    info.residual = float(np.linalg.norm(residual)) / rhs_norm
    if info.residual > solver_tol:
        raise SolverConvergenceError(
            f"resolvent solve at z={op.z}, tau={op.tau}, lambda={lam} did not converge",
            residual=info.residual,
            iterations=info.iterations,
        )
    logger.debug(f"resolvent lambda={lam:.4g}: {info.iterations} iterations, residual {info.residual:.2e}")
    return u.reshape(shape), info


def resolvent(
    op: FrozenOperator,
    lam: float,
    f: Field,
    solver_tol: float = 1e-10,
    max_iterations: int = 200,
) -> Field:
    """u with (lam - iA) u = f, ||residual|| <= solver_tol ||f||"""
    op.check(f)
    _check_shift(lam, solver_tol)
    u, _ = solve_shifted(op, lam, f.values, solver_tol, max_iterations)
    return f.with_values(_finite(u, "resolvent"))


def dense_resolvent(op: FrozenOperator, lam: float, f: Field) -> Field:
    """Direct dense solve of (lam - iA) u = f (small grids only)"""
    op.check(f)
    if lam == 0:
        raise ValueError("resolvent shift must be nonzero")
    matrix = lam * np.eye(op.grid.size) - 1j * dense_matrix(op)
    u = sla.solve(matrix, f.values.ravel().astype(complex))
    return f.with_values(u.reshape(op.grid.shape))


@dataclass
class LedgerStep:
    """One entry of a bootstrap exponent sequence"""
    index: int
    exponent: Number
    extras: Dict[str, Number] = field(default_factory=dict)


@dataclass
class BootstrapLedger:
    """Exponent bookkeeping of the elliptic regularity upgrade H^s -> H^(s+2)"""
    s: Number
    r: Number
    dimension: int
    exact: bool
    epsilon: Number
    claim1: Number
    claim2_steps: List[LedgerStep] = field(default_factory=list)
    claim2_step_count: int = 0
    claim3_steps: List[LedgerStep] = field(default_factory=list)
    claim3_step_count: int = 0
    final: Number = 0

    @property
    def claim2_exponents(self) -> List[Number]:
        return [step.exponent for step in self.claim2_steps]

    @property
    def claim3_exponents(self) -> List[Number]:
        return [step.exponent for step in self.claim3_steps]

    def to_dict(self) -> Dict[str, Any]:
        def num(value: Number) -> Any:
            if isinstance(value, Fraction):
                return int(value) if value.denominator == 1 else str(value)
            return value

        def steps(entries: List[LedgerStep]) -> List[Dict[str, Any]]:
            return [
                {"j": e.index, "exponent": num(e.exponent), **{k: num(v) for k, v in e.extras.items()}}
                for e in entries
            ]

        return {
            "s": num(self.s),
            "r": num(self.r),
            "dimension": self.dimension,
            "exact": self.exact,
            "epsilon": num(self.epsilon),
            "claim1": num(self.claim1),
            "claim2_steps": steps(self.claim2_steps),
            "claim2_step_count": self.claim2_step_count,
            "claim3_steps": steps(self.claim3_steps),
            "claim3_step_count": self.claim3_step_count,
            "final": num(self.final),
        }


def _ceil(value: Number, exact: bool) -> int:
    if exact:
        return math.ceil(value)
    return math.ceil(value - 1e-12)


def bootstrap_ledger(s: Number, r: Number, dimension: int = 2) -> BootstrapLedger:
    """
    Exponent sequences of the elliptic bootstrap for Av in H^s with c - c0 in H^(r+1)

    Rational inputs (int or Fraction) are tracked exactly; floats use 1e-12
    guards on the ceilings.

    Args:
        s: Data exponent, 0 <= s < r
        r: Coefficient exponent, r < 1
        dimension: 2 for the planar lemma, 1 for the single-step line case

    Returns:
        BootstrapLedger
    """
    exact = all(isinstance(v, (int, Fraction)) for v in (s, r))
    if exact:
        s, r = Fraction(s), Fraction(r)
    else:
        s, r = float(s), float(r)
    if not 0 <= s < r < 1:
        raise LedgerDomainError(f"bootstrap ledger needs 0 <= s < r < 1, got s={s}, r={r}")
    if dimension not in (1, 2):
        raise LedgerDomainError(f"bootstrap ledger is defined for dimension 1 or 2, got {dimension}")

    half = Fraction(1, 2) if exact else 0.5
    epsilon = r / 4

    if dimension == 1:
        return BootstrapLedger(s, r, 1, exact, epsilon, claim1=s + 2, final=s + 2)

    ledger = BootstrapLedger(s, r, 2, exact, epsilon, claim1=s + r, final=s + 2)

    # v in H^(r + min(1, t_j)), t_j = s + j r / 2
    ledger.claim2_step_count = _ceil(2 * (1 - s) / r, exact)
    for j in range(ledger.claim2_step_count + 1):
        t_j = s + j * r * half
        r_j = min(r + 1, t_j + 3 * r * half)
        ledger.claim2_steps.append(LedgerStep(j, r + min(1, t_j), {"t": t_j, "r_j": r_j}))

    # v in H^min(s + 2, 1 + (j + 1) r / 2), j >= 1
    ledger.claim3_step_count = _ceil(2 * (1 + s) / r - 1, exact)
    for j in range(1, ledger.claim3_step_count + 1):
        s_j = (j + 1) * r * half
        q_j = s_j + r * half - 1
        ledger.claim3_steps.append(LedgerStep(j, min(s + 2, 1 + s_j), {"s_j": s_j, "q_j": q_j}))

    return ledger


def operator_lipschitz_estimate(
    medium: Medium,
    tau: float,
    z0: float,
    z1: float,
    grid: LateralGrid,
    fields: int = 8,
    kmax: int = 4,
    seed: int = 0,
) -> float:
    """
    Estimate ||A(tau; z1) - A(tau; z0)||_{L(H^2, L^2)} / |z1 - z0| on random test fields

    Args:
        medium: Medium
        tau: Frozen frequency
        z0, z1: Distinct depths
        grid: Lateral grid
        fields: Number of band-limited test fields
        kmax: Test-field band (integer wave index)
        seed: Seed of the first test field

    Returns:
        Largest observed ratio
    """
    from ..spectral.profiles import random_band_limited_field

    if z0 == z1:
        raise ValueError("Lipschitz estimate needs two distinct depths")
    first = FrozenOperator.freeze(medium, z0, tau, grid)
    second = FrozenOperator.freeze(medium, z1, tau, grid)
    worst = 0.0
    for index in range(fields):
        v = random_band_limited_field(grid, kmax, seed + index)
        difference = apply_A(second, v) - apply_A(first, v)
        worst = max(worst, difference.l2_norm() / sobolev_norm(v, 2.0))
    return worst / abs(z1 - z0)


def resolvent_continuity(
    medium: Medium,
    lam: float,
    f: Field,
    samples: List[Tuple[float, float]],
    solver_tol: float = 1e-10,
) -> List[Dict[str, float]]:
    """||R(lam, iA(tau, z)) f - R(lam, iA(tau0, z0)) f|| along (z, tau) samples, first sample as reference"""
    if not samples:
        raise ValueError("resolvent continuity needs at least one (z, tau) sample")
    z0, tau0 = samples[0]
    reference = resolvent(FrozenOperator.freeze(medium, z0, tau0, f.grid), lam, f, solver_tol)
    rows = []
    for z, tau in samples:
        u = resolvent(FrozenOperator.freeze(medium, z, tau, f.grid), lam, f, solver_tol)
        rows.append({"z": float(z), "tau": float(tau), "difference": (u - reference).l2_norm()})
    return rows
