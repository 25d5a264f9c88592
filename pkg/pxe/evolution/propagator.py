"""Frozen-coefficient Cayley steps, the product evolution system and mild solutions"""

import math
from dataclasses import asdict, dataclass, field, replace
from functools import reduce
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import ConfigError, MeshAlignmentError, StructuralError
from ..core.logger import logger
from ..medium.medium import Medium
from ..operators.generator import FrozenOperator, solve_shifted
from ..spectral.lateral_grid import Field, LateralGrid, sobolev_norm

MAX_TOTAL_STEPS = 10 ** 7
SHARED_MESH_FACTOR = 8
NODE_SNAP = 1e-9
QUADRATURES = ("midpoint",)

Source = Callable[[float], Union[Field, np.ndarray]]


@dataclass(frozen=True)
class EvolutionConfig:
    """Depth discretization: macro mesh z_j = jZ/n, each interval split into micro steps"""
    depth_end: float = 1.0
    macro_steps: int = 16
    micro_substeps: int = 4
    quadrature: str = "midpoint"
    solver_tol: float = 1e-10
    max_iterations: int = 200
    record_h2: bool = False

    def __post_init__(self):
        if not self.depth_end > 0:
            raise ConfigError(f"depth_end must be positive, got {self.depth_end}")
        if self.macro_steps < 1 or self.micro_substeps < 1:
            raise ConfigError("macro_steps and micro_substeps must be >= 1")
        if self.macro_steps * self.micro_substeps > MAX_TOTAL_STEPS:
            raise ConfigError(
                f"{self.macro_steps} x {self.micro_substeps} steps exceeds the guard of {MAX_TOTAL_STEPS}"
            )
        if self.quadrature not in QUADRATURES:
            raise ConfigError(f"unsupported quadrature '{self.quadrature}'")
        if not 0 < self.solver_tol <= 1e-6:
            raise ConfigError(f"solver_tol must lie in (0, 1e-6], got {self.solver_tol}")

    @property
    def macro_step(self) -> float:
        return self.depth_end / self.macro_steps

    @property
    def micro_step(self) -> float:
        return self.depth_end / (self.macro_steps * self.micro_substeps)

    @property
    def macro_nodes(self) -> np.ndarray:
        return np.arange(self.macro_steps + 1) * self.depth_end / self.macro_steps

    def node(self, index: int) -> float:
        return index * self.depth_end / self.macro_steps

    def is_macro_node(self, z: float) -> bool:
        position = z / self.macro_step
        return abs(position - round(position)) <= NODE_SNAP

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TraceRecord:
    z: float
    l2: float
    iterations: int
    frozen_at: float
    h2: Optional[float] = None


@dataclass
class PropagationTrace:
    """Per-macro-interval records of an evolution run"""
    tau: float
    records: List[TraceRecord] = field(default_factory=list)
    initial_l2: float = 0.0

    @property
    def total_iterations(self) -> int:
        return sum(r.iterations for r in self.records)

    def max_drift(self) -> float:
        """Largest relative deviation of the L^2 norm from its initial value"""
        if self.initial_l2 == 0 or not self.records:
            return 0.0
        return max(abs(r.l2 - self.initial_l2) for r in self.records) / self.initial_l2

    def extend(self, other: "PropagationTrace") -> None:
        self.records.extend(other.records)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "initial_l2": self.initial_l2,
            "steps": [
                {k: v for k, v in asdict(r).items() if v is not None} for r in self.records
            ],
        }


def cayley_values(op: FrozenOperator, zeta: float, values: np.ndarray, solver_tol: float,
                  max_iterations: int) -> Tuple[np.ndarray, int]:
    """(I - i zeta/2 A)^(-1) (I + i zeta/2 A) on raw samples; returns (samples, iterations)"""
    if zeta == 0:
        return values.astype(complex, copy=True), 0
    lam = 2.0 / zeta
    # (I - i zeta/2 A) u = w  <=>  (lam - iA) u = lam w
    w = values + 0.5j * zeta * op.apply_values(values)
    u, info = solve_shifted(op, lam, lam * w, solver_tol, max_iterations)
    return u, info.iterations


def frozen_step(op: FrozenOperator, zeta: float, v: Field, solver_tol: float = 1e-10,
                max_iterations: int = 200) -> Field:
    """Crank-Nicolson (Cayley) approximation of exp(i zeta A) v"""
    op.check(v)
    if not math.isfinite(zeta):
        raise ValueError(f"step length must be finite, got {zeta}")
    values, _ = cayley_values(op, zeta, v.values, solver_tol, max_iterations)
    return v.with_values(values)


def _micro_position(z: float, cfg: EvolutionConfig) -> float:
    position = z / cfg.micro_step
    nearest = round(position)
    if abs(position - nearest) <= NODE_SNAP * max(1.0, abs(position)):
        return float(nearest)
    return position


def _check_interval(z_from: float, z_to: float, cfg: EvolutionConfig) -> None:
    slack = NODE_SNAP * cfg.depth_end
    if not (-slack <= z_from <= z_to <= cfg.depth_end + slack):
        raise ValueError(f"need 0 <= z_from <= z_to <= Z={cfg.depth_end}, got {z_from}, {z_to}")


class OperatorCache:
    """Frozen operators keyed by macro interval index"""

    def __init__(self, medium: Medium, tau: float, grid: LateralGrid, cfg: EvolutionConfig):
        self.medium = medium
        self.tau = tau
        self.grid = grid
        self.cfg = cfg
        self._operators: Dict[int, FrozenOperator] = {}

    def get(self, index: int) -> FrozenOperator:
        if index not in self._operators:
            self._operators[index] = FrozenOperator.freeze(
                self.medium, self.cfg.node(index), self.tau, self.grid
            )
        return self._operators[index]


def evolve(
    m: Medium,
    tau: float,
    z_from: float,
    z_to: float,
    v: Field,
    cfg: EvolutionConfig,
    cache: Optional[OperatorCache] = None,
) -> Tuple[Field, PropagationTrace]:
    """
    U_n(tau; z_to, z_from) v: Cayley micro steps with the coefficient frozen at
    the left node of each macro interval

    Args:
        m: Medium
        tau: Frequency
        z_from, z_to: 0 <= z_from <= z_to <= Z
        v: Field on the evolution grid
        cfg: Depth discretization
        cache: Reusable frozen operators for this (medium, tau, grid)

    Returns:
        Tuple of (field at z_to, trace with one record per traversed macro interval)
    """
    _check_interval(z_from, z_to, cfg)
    cache = cache or OperatorCache(m, tau, v.grid, cfg)
    trace = PropagationTrace(tau=float(tau), initial_l2=v.l2_norm())

    m_sub = cfg.micro_substeps
    k = cfg.micro_step
    position = _micro_position(z_from, cfg)
    target = _micro_position(z_to, cfg)
    values = np.asarray(v.values, dtype=complex)

    while position < target:
        interval = min(int(math.floor(position / m_sub)), cfg.macro_steps - 1)
        op = cache.get(interval)
        segment_end = min(float((interval + 1) * m_sub), target)
        iterations = 0
        while position < segment_end:
            next_position = min(math.floor(position) + 1.0, segment_end)
            values, used = cayley_values(op, (next_position - position) * k, values,
                                         cfg.solver_tol, cfg.max_iterations)
            iterations += used
            position = next_position

        current = Field(v.grid, values, z=position * k, tau=tau)
        trace.records.append(TraceRecord(
            z=position * k,
            l2=current.l2_norm(),
            iterations=iterations,
            frozen_at=cfg.node(interval),
            h2=sobolev_norm(current, 2.0) if cfg.record_h2 else None,
        ))
        logger.debug(f"tau={tau:.4g}: z={position * k:.6g} frozen at {cfg.node(interval):.6g}, "
                     f"{iterations} iterations")

    return Field(v.grid, values, z=z_to, tau=tau), trace


def _source_field(g: Optional[Source], rho: float, grid: LateralGrid, tau: float) -> Optional[Field]:
    if g is None:
        return None
    sample = g(rho)
    if isinstance(sample, Field):
        if sample.grid != grid:
            raise StructuralError(f"source at rho={rho} is not on the evolution grid")
        values = sample.values
    else:
        values = np.asarray(sample)
    if not np.any(values):
        return None
    return Field(grid, values, z=rho, tau=tau)


def mild_solve(
    m: Medium,
    tau: float,
    v0: Field,
    g: Optional[Source],
    cfg: EvolutionConfig,
) -> Tuple[List[Field], PropagationTrace]:
    """
    v(z) = U(z, 0) v0 + int_0^z U(z, rho) g(rho) drho on the macro mesh

    The integral uses the midpoint rule on each macro interval; each source
    sample is transported by evolve from the midpoint to the interval end and
    then carried along with the homogeneous part.

    Returns:
        Tuple of (trajectory at macro nodes including z = 0, trace)
    """
    grid = v0.grid
    cache = OperatorCache(m, tau, grid, cfg)
    h = cfg.macro_step
    current = v0.at(z=0.0, tau=tau)
    trajectory = [current]
    trace = PropagationTrace(tau=float(tau), initial_l2=v0.l2_norm())

    for j in range(cfg.macro_steps):
        z_left, z_right = cfg.node(j), cfg.node(j + 1)
        current, segment = evolve(m, tau, z_left, z_right, current, cfg, cache)
        midpoint = 0.5 * (z_left + z_right)
        source = _source_field(g, midpoint, grid, tau)
        if source is not None:
            transported, _ = evolve(m, tau, midpoint, z_right, source, cfg, cache)
            current = current.with_values(current.values + h * transported.values)
        current = current.at(z=z_right)
        trajectory.append(current)
        trace.extend(segment)
        if segment.records:
            trace.records[-1].l2 = current.l2_norm()
            if cfg.record_h2:
                trace.records[-1].h2 = sobolev_norm(current, 2.0)

    return trajectory, trace


def stationary_mild_solve(
    tau: float,
    v0: Field,
    g: Optional[Source],
    cfg: EvolutionConfig,
) -> Tuple[List[Field], PropagationTrace]:
    """
    mild_solve for a vanishing generator: v(z) = v0 + int_0^z g(rho) drho

    Same macro mesh and midpoint rule as mild_solve, so the trajectory is the
    limit of mild_solve as the generator goes to zero.
    """
    grid = v0.grid
    h = cfg.macro_step
    current = v0.at(z=0.0, tau=tau)
    trajectory = [current]
    trace = PropagationTrace(tau=float(tau), initial_l2=v0.l2_norm())

    for j in range(cfg.macro_steps):
        z_left, z_right = cfg.node(j), cfg.node(j + 1)
        source = _source_field(g, 0.5 * (z_left + z_right), grid, tau)
        values = current.values if source is None else current.values + h * source.values
        current = Field(grid, values, z=z_right, tau=tau)
        trajectory.append(current)
        trace.records.append(TraceRecord(
            z=z_right,
            l2=current.l2_norm(),
            iterations=0,
            frozen_at=z_left,
            h2=sobolev_norm(current, 2.0) if cfg.record_h2 else None,
        ))

    return trajectory, trace


def group_mild_solve(
    op: FrozenOperator,
    v0: Field,
    g: Optional[Source],
    depth: float,
    steps: int,
    solver_tol: float = 1e-10,
) -> List[Field]:
    """
    v(z) = T(z) v0 + int_0^z T(z - rho) g(rho) drho for the group of one frozen operator

    Cayley transport and midpoint quadrature on a uniform mesh of `steps` intervals.
    """
    op.check(v0)
    if steps < 1 or depth <= 0:
        raise ValueError("group mild solve needs depth > 0 and steps >= 1")
    h = depth / steps
    values = np.asarray(v0.values, dtype=complex)
    trajectory = [v0.at(z=0.0)]
    for j in range(steps):
        values, _ = cayley_values(op, h, values, solver_tol, 200)
        source = _source_field(g, (j + 0.5) * h, op.grid, v0.tau)
        if source is not None:
            half, _ = cayley_values(op, 0.5 * h, source.values, solver_tol, 200)
            values = values + h * half
        trajectory.append(Field(op.grid, values, z=(j + 1) * h, tau=v0.tau))
    return trajectory


def check_evolution_property(
    m: Medium,
    tau: float,
    z1: float,
    z2: float,
    z3: float,
    v: Field,
    cfg: EvolutionConfig,
) -> float:
    """||U(z1, z2) U(z2, z3) v - U(z1, z3) v|| / ||v|| for z1 >= z2 >= z3 with z2 on the macro mesh"""
    if not z1 >= z2 >= z3:
        raise ValueError(f"need z1 >= z2 >= z3, got {z1}, {z2}, {z3}")
    if not cfg.is_macro_node(z2):
        raise MeshAlignmentError(f"z2={z2} is not a node of the macro mesh with step {cfg.macro_step}")
    norm = v.l2_norm()
    if norm == 0:
        return 0.0

    cache = OperatorCache(m, tau, v.grid, cfg)
    inner, _ = evolve(m, tau, z3, z2, v, cfg, cache)
    composed, _ = evolve(m, tau, z2, z1, inner, cfg, cache)
    direct, _ = evolve(m, tau, z3, z1, v, cfg, cache)
    return float(np.sqrt(v.grid.cell_measure * np.sum(np.abs(composed.values - direct.values) ** 2)) / norm)


@dataclass
class ConvergenceReport:
    """Self-convergence of U_n v in n"""
    tau: float
    n_values: List[int]
    differences: List[float]
    order: Optional[float]
    exact: bool
    observed_orders: List[Optional[float]] = field(default_factory=list)
    monotone: bool = True
    micro_steps: int = 0
    mesh: str = "shared"

    @property
    def order_label(self) -> str:
        if self.exact:
            return "exact"
        return "undetermined" if self.order is None else f"{self.order:.3f}"

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["order_label"] = self.order_label
        return data


def _lcm(values: Sequence[int]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


def convergence_study(
    m: Medium,
    tau: float,
    v0: Field,
    cfg: EvolutionConfig,
    n_list: Sequence[int],
    exact_tol: float = 1e-8,
) -> ConvergenceReport:
    """
    Final-field differences of U_n v0 over [0, Z] and a fitted order

    When lcm(n_list) stays within SHARED_MESH_FACTOR * max(n), all runs share
    the micro mesh Z / (lcm * micro_substeps), so only the coefficient-freezing
    error changes with n, and differences are taken between consecutive n.
    Otherwise each run gets about max(n) * micro_substeps micro steps of its
    own and differences are taken against the finest run (mesh "reference").
    """
    n_values = [int(n) for n in n_list]
    if len(n_values) < 2 or any(b <= a for a, b in zip(n_values, n_values[1:])) or n_values[0] < 1:
        raise ValueError(f"n_list must be strictly increasing with >= 2 positive entries, got {n_list}")

    finest = n_values[-1]
    lcm = _lcm(n_values)
    shared = lcm <= SHARED_MESH_FACTOR * finest and lcm * cfg.micro_substeps <= MAX_TOTAL_STEPS
    if shared:
        micro_total = lcm * cfg.micro_substeps
        substeps = {n: micro_total // n for n in n_values}
    else:
        micro_total = finest * cfg.micro_substeps
        substeps = {n: -(-micro_total // n) for n in n_values}
        logger.info(f"lcm({n_values}) = {lcm}: per-n micro meshes, differences against n={finest}")

    finals = []
    for n in n_values:
        run_cfg = replace(cfg, macro_steps=n, micro_substeps=substeps[n])
        final, trace = evolve(m, tau, 0.0, run_cfg.depth_end, v0, run_cfg)
        finals.append(final)
        logger.debug(f"convergence run n={n}: {trace.total_iterations} solver iterations")

    if shared:
        differences = [(a - b).l2_norm() for a, b in zip(finals, finals[1:])]
    else:
        differences = [(a - finals[-1]).l2_norm() for a in finals[:-1]]
    exact = all(d <= exact_tol for d in differences)

    observed: List[Optional[float]] = []
    for (n_a, n_b), (d_a, d_b) in zip(zip(n_values, n_values[1:]), zip(differences, differences[1:])):
        if d_a > 0 and d_b > 0:
            observed.append(math.log(d_a / d_b) / math.log(n_b / n_a))
        else:
            observed.append(None)

    order: Optional[float] = None
    usable = [(n, d) for n, d in zip(n_values, differences) if d > 0]
    if not exact and len(usable) >= 2:
        slope = np.polyfit(np.log([n for n, _ in usable]), np.log([d for _, d in usable]), 1)[0]
        order = float(-slope)

    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(differences, differences[1:]))
    if not monotone and not exact:
        logger.warning(f"tau={tau}: self-convergence differences are not monotone: {differences}")

    report = ConvergenceReport(
        tau=float(tau),
        n_values=n_values,
        differences=differences,
        order=order,
        exact=exact,
        observed_orders=observed,
        monotone=monotone,
        micro_steps=micro_total,
        mesh="shared" if shared else "reference",
    )
    logger.info(f"Convergence study at tau={tau}: order {report.order_label}")
    return report
