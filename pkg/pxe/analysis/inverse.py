"""Rough-versus-smooth medium comparison of H^2 control along depth"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import RunConfig
from ..core.errors import ConfigError, StructuralError
from ..core.logger import logger
from ..evolution.propagator import EvolutionConfig, mild_solve
from ..medium.medium import ExampleCoefficient, Medium, MediumTerm
from ..medium.presets import medium_from_spec
from ..spectral.lateral_grid import Field, LateralGrid, sobolev_norm
from ..spectral.profiles import profile_from_spec
from .estimators import estimate_sobolev_exponent

PRESERVED = "H2 preserved"
DEGRADED = "H2 degraded"
INCONCLUSIVE = "inconclusive"


@dataclass
class InverseConfig:
    """Paired-medium experiment settings"""
    smooth: Dict[str, Any]
    rough: Dict[str, Any]
    evolution: EvolutionConfig
    resolutions: List[int] = field(default_factory=lambda: [128, 256])
    tau: float = 1.0
    dimension: int = 2
    length: float = 4.0
    data: Dict[str, Any] = field(default_factory=lambda: {"kind": "band_limited", "kmax": 6.0})
    degradation_factor: float = 2.0
    baseline_stability: float = 0.1
    min_fit_decades: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if len(self.resolutions) < 2:
            raise ConfigError("inverse experiment needs at least two resolutions")
        if sorted(self.resolutions) != list(self.resolutions):
            raise ConfigError(f"resolutions must be increasing, got {self.resolutions}")
        if self.degradation_factor <= 1:
            raise ConfigError(f"degradation_factor must exceed 1, got {self.degradation_factor}")

    @property
    def band(self) -> float:
        """Indicator band: half the Nyquist frequency of the coarsest grid"""
        return np.pi * self.resolutions[0] / self.length / 2.0

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> "InverseConfig":
        block = cfg.section("inverse")
        grid = cfg.section("grid")
        thresholds = cfg.analysis().thresholds
        try:
            return cls(
                smooth=dict(block["smooth"]),
                rough=dict(block["rough"]),
                evolution=cfg.evolution(),
                resolutions=[int(n) for n in block["resolutions"]],
                tau=float(block["tau"]),
                dimension=int(grid["d"]),
                length=float(grid["L"]),
                data=dict(block["data"]),
                degradation_factor=thresholds.degradation_factor,
                baseline_stability=thresholds.baseline_stability,
                min_fit_decades=thresholds.min_fit_decades,
                seed=cfg.seed,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid inverse block: {e}") from e


@dataclass
class IndicatorTrajectory:
    """H^2 measurements of one medium's solution at the macro nodes"""
    medium: str
    points: int
    depths: List[float]
    h2: List[float]
    indicator: List[float]
    tail_exponent: List[Optional[float]]
    tail_status: List[str]

    @property
    def peak(self) -> float:
        return max(self.indicator)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "medium": self.medium,
            "points": self.points,
            "depths": self.depths,
            "h2": self.h2,
            "indicator": self.indicator,
            "tail_exponent": self.tail_exponent,
            "tail_status": self.tail_status,
            "peak": self.peak,
        }


@dataclass
class ResolutionOutcome:
    points: int
    smooth: IndicatorTrajectory
    rough: IndicatorTrajectory
    baseline: float
    decision: str


@dataclass
class InverseReport:
    """Per-resolution indicator trajectories and the refinement-checked decision"""
    tau: float
    band: float
    degradation_factor: float
    baseline_stability: float
    outcomes: List[ResolutionOutcome] = field(default_factory=list)

    @property
    def baselines(self) -> List[float]:
        return [o.baseline for o in self.outcomes]

    @property
    def baseline_stable(self) -> bool:
        return compare_resolutions(self.baselines, self.baseline_stability)

    @property
    def consistent(self) -> bool:
        return len({o.decision for o in self.outcomes}) == 1

    @property
    def decision(self) -> str:
        if not (self.consistent and self.baseline_stable):
            return INCONCLUSIVE
        return self.outcomes[0].decision

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "band": self.band,
            "degradation_factor": self.degradation_factor,
            "baseline_stability": self.baseline_stability,
            "calibration": "degradation factor and baseline tolerance are calibration constants",
            "decision": self.decision,
            "consistent": self.consistent,
            "baseline_stable": self.baseline_stable,
            "resolutions": [
                {
                    "points": o.points,
                    "baseline": o.baseline,
                    "decision": o.decision,
                    "smooth": o.smooth.to_dict(),
                    "rough": o.rough.to_dict(),
                }
                for o in self.outcomes
            ],
        }

    def table(self) -> Tuple[List[str], List[List[Any]]]:
        """Per-depth CSV rows"""
        header = [
            "points", "z", "smooth_h2", "smooth_indicator", "rough_h2", "rough_indicator",
            "smooth_tail_s", "rough_tail_s",
        ]
        rows = []
        for o in self.outcomes:
            for i, z in enumerate(o.smooth.depths):
                rows.append([
                    o.points, z, o.smooth.h2[i], o.smooth.indicator[i], o.rough.h2[i],
                    o.rough.indicator[i], o.smooth.tail_exponent[i], o.rough.tail_exponent[i],
                ])
        return header, rows


def h2_indicator_trajectory(
    label: str,
    medium_spec: Dict[str, Any],
    grid: LateralGrid,
    v0: Field,
    cfg: InverseConfig,
) -> IndicatorTrajectory:
    """Evolve v0 through one medium and measure band-limited H^2 at each macro node"""
    medium = medium_from_spec(medium_spec, length=grid.length)
    trajectory, trace = mild_solve(medium, cfg.tau, v0, None, cfg.evolution)
    initial = sobolev_norm(v0, 2.0, band=cfg.band)
    if initial == 0:
        raise ConfigError("inverse experiment needs nonzero initial data in the indicator band")

    h2, indicator, exponents, statuses = [], [], [], []
    for f in trajectory:
        value = sobolev_norm(f, 2.0, band=cfg.band)
        estimate = estimate_sobolev_exponent(f, min_decades=cfg.min_fit_decades, label=label)
        h2.append(sobolev_norm(f, 2.0))
        indicator.append(value / initial)
        exponents.append(estimate.exponent if np.isfinite(estimate.exponent) else None)
        statuses.append(estimate.status)

    logger.debug(f"{label} at N={grid.points}: {trace.total_iterations} solver iterations")
    return IndicatorTrajectory(
        medium=label,
        points=grid.points,
        depths=[f.z for f in trajectory],
        h2=h2,
        indicator=indicator,
        tail_exponent=exponents,
        tail_status=statuses,
    )


def _initial_data(cfg: InverseConfig, grid: LateralGrid) -> Field:
    rng = np.random.default_rng(cfg.seed)
    return Field(grid, profile_from_spec(grid, cfg.data, rng), tau=cfg.tau)


def _term_signature(term: MediumTerm, depths: Sequence[float]) -> Tuple[Any, ...]:
    coefficient = term.coefficient
    symbol = (term.symbol.kind, tuple(sorted(term.symbol.params.items())))
    if isinstance(coefficient, ExampleCoefficient):
        chi0 = tuple(round(float(coefficient.chi0(z)), 12) for z in depths)
        return "example", coefficient.r1, coefficient.r2, chi0, symbol
    settings = sorted((k, v) for k, v in coefficient.to_dict().items() if k != "declared_r")
    return coefficient.kind, tuple(settings), symbol


def _is_rough(coefficient: ExampleCoefficient, depths: Sequence[float]) -> bool:
    return coefficient.eps == 0 and all(coefficient.alpha(z) < 1 for z in depths)


def check_medium_pair(smooth: Medium, rough: Medium, depths: Sequence[float]) -> None:
    """
    The two media may differ only in the regularity of their example terms

    c0, term kinds, symbols, cut-off radii and chi0 must agree. Every example
    term of the rough medium that differs from its smooth partner needs
    alpha(z) < 1 at all depths and eps = 0. Identical media are accepted as a
    control run.

    Raises:
        StructuralError
    """
    if smooth.c0 != rough.c0:
        raise StructuralError(f"smooth and rough media need the same c0, got {smooth.c0} and {rough.c0}")
    if len(smooth.terms) != len(rough.terms):
        raise StructuralError(f"smooth medium has {len(smooth.terms)} terms, rough medium {len(rough.terms)}")

    for index, (a, b) in enumerate(zip(smooth.terms, rough.terms)):
        if _term_signature(a, depths) != _term_signature(b, depths):
            raise StructuralError(f"term {index} differs between the media beyond its regularity")
        first, second = a.coefficient, b.coefficient
        if not isinstance(second, ExampleCoefficient):
            continue
        same = first.eps == second.eps and all(first.alpha(z) == second.alpha(z) for z in depths)
        if not same and not _is_rough(second, depths):
            raise StructuralError(
                f"rough term {index} needs alpha < 1 and eps = 0, got alpha(0)={second.alpha(0.0):g}, eps={second.eps:g}"
            )


def inverse_regularity_experiment(cfg: InverseConfig, workers: int = 1) -> InverseReport:
    """
    Compare H^2 control of solutions through a smooth and a rough medium

    Both media receive the same band-limited data at every resolution. The
    smooth medium's peak indicator is the baseline C_base; the rough medium is
    declared degraded when its indicator reaches degradation_factor * C_base.
    The decision counts only when every resolution agrees and the baselines
    are refinement-stable. The media are checked with check_medium_pair first.

    Args:
        cfg: Experiment settings
        workers: Thread pool size for the independent (resolution, medium) runs

    Returns:
        InverseReport
    """
    check_medium_pair(
        medium_from_spec(cfg.smooth, length=cfg.length),
        medium_from_spec(cfg.rough, length=cfg.length),
        list(cfg.evolution.macro_nodes),
    )
    grids = {n: LateralGrid(cfg.dimension, n, cfg.length) for n in cfg.resolutions}
    data = {n: _initial_data(cfg, grid) for n, grid in grids.items()}
    jobs = [(n, label, spec) for n in cfg.resolutions for label, spec in (("smooth", cfg.smooth), ("rough", cfg.rough))]

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {
            (n, label): pool.submit(h2_indicator_trajectory, label, spec, grids[n], data[n], cfg)
            for n, label, spec in jobs
        }
        results = {key: future.result() for key, future in futures.items()}

    report = InverseReport(
        tau=cfg.tau,
        band=cfg.band,
        degradation_factor=cfg.degradation_factor,
        baseline_stability=cfg.baseline_stability,
    )
    for n in cfg.resolutions:
        smooth, rough = results[(n, "smooth")], results[(n, "rough")]
        baseline = smooth.peak
        decision = DEGRADED if rough.peak >= cfg.degradation_factor * baseline else PRESERVED
        report.outcomes.append(ResolutionOutcome(n, smooth, rough, baseline, decision))
        logger.info(f"N={n}: C_base={baseline:.4g}, rough peak={rough.peak:.4g} -> {decision}")

    if report.decision == INCONCLUSIVE:
        logger.warning(
            f"Inverse experiment inconclusive: decisions {[o.decision for o in report.outcomes]}, "
            f"baselines {report.baselines}"
        )
    return report


def compare_resolutions(values: Sequence[float], tolerance: float) -> bool:
    reference = values[0]
    return all(abs(v - reference) <= tolerance * abs(reference) for v in values[1:])
