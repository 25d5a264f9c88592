"""Sobolev-exponent estimation from Fourier tails and product-regularity checks"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.errors import StructuralError
from ..core.logger import logger
from ..spectral.lateral_grid import Field, LateralGrid, _inverse, fourier_forward
from ..spectral.profiles import gaussian_profile

SMOOTH_EXPONENT = 8.0
DEGENERATE_TAIL = 1e-30
SMOOTH_FLOOR = 1e-25
RANDOM_FIELD_DELTA = 0.05


@dataclass
class RegularityEstimate:
    """Power-law fit of the shell-averaged spectrum |F|^2 ~ |xi|^(-p)"""
    slope: float
    exponent: float
    fit_range: Tuple[float, float]
    residual: float
    decades: float
    status: str = "ok"
    label: str = ""

    @property
    def reliable(self) -> bool:
        return self.status != "unreliable"

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in ("slope", "exponent", "residual", "decades"):
            if not math.isfinite(data[key]):
                data[key] = None
        data["fit_range"] = list(self.fit_range)
        return data


def default_fit_range(grid: LateralGrid) -> Tuple[float, float]:
    """Resolved band [xi_nyq / 16, xi_nyq / 2]"""
    return grid.xi_nyquist / 16.0, grid.xi_nyquist / 2.0


def shell_spectrum(f: Field) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Shell-averaged spectral energy

    Args:
        f: Field to analyze

    Returns:
        Tuple of (shell centers |xi|, mean |F|^2 per shell, modes per shell)
    """
    grid = f.grid
    power = fourier_forward(f).power()
    step = 2.0 * np.pi / grid.length
    index = np.rint(grid.xi_abs / step).astype(int).ravel()
    counts = np.bincount(index)
    sums = np.bincount(index, weights=power.ravel())
    centers = np.arange(counts.size) * step
    occupied = counts > 0
    means = np.zeros_like(sums)
    means[occupied] = sums[occupied] / counts[occupied]
    return centers, means, counts


def estimate_sobolev_exponent(
    f: Field,
    fit_range: Optional[Tuple[float, float]] = None,
    min_decades: float = 0.9,
    label: str = "",
) -> RegularityEstimate:
    """
    Largest s with f in H^s, read off the Fourier tail

    The shell-averaged energy is fitted to |xi|^(-p) by least squares in log-log
    coordinates; the implied exponent is (p - d) / 2.

    Args:
        f: Nonzero field
        fit_range: Band [xi_lo, xi_hi]; defaults to [xi_nyq / 16, xi_nyq / 2]
        min_decades: Narrower fits are marked unreliable
        label: Free-form tag carried into the report

    Returns:
        RegularityEstimate with status "ok", "smooth" or "unreliable"
    """
    grid = f.grid
    lo, hi = fit_range if fit_range is not None else default_fit_range(grid)
    hi = min(hi, grid.xi_nyquist)
    lo = max(lo, 2.0 * np.pi / grid.length)
    nan = float("nan")

    centers, means, counts = shell_spectrum(f)
    total = float(np.sum(means * counts))
    slack = 1e-9 * hi
    in_band = (centers >= lo - slack) & (centers <= hi + slack) & (counts > 0)
    tail = float(np.sum((means * counts)[centers >= lo - slack]))

    if total <= 0 or tail <= DEGENERATE_TAIL * total or not np.any(in_band):
        return RegularityEstimate(nan, nan, (lo, hi), nan, 0.0, "unreliable", label)

    band_centers = centers[in_band]
    band_means = means[in_band]
    decades = float(np.log10(band_centers[-1] / band_centers[0])) if band_centers.size > 1 else 0.0

    peak = float(np.max(means))
    if band_means[-1] <= SMOOTH_FLOOR * peak:
        return RegularityEstimate(nan, math.inf, (lo, hi), nan, decades, "smooth", label)

    positive = band_means > 0
    x = np.log(band_centers[positive])
    y = np.log(band_means[positive])
    if x.size < 3:
        return RegularityEstimate(nan, nan, (lo, hi), nan, decades, "unreliable", label)

    design = np.vstack([x, np.ones_like(x)]).T
    (coef, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(np.mean((design @ np.array([coef, intercept]) - y) ** 2)) / np.log(10))
    slope = float(-coef)
    exponent = (slope - grid.dimension) / 2.0

    if decades < min_decades - 1e-9:
        status = "unreliable"
    elif exponent > SMOOTH_EXPONENT:
        status = "smooth"
    else:
        status = "ok"

    logger.debug(
        f"Tail fit {label or ''} on [{lo:.3g}, {hi:.3g}]: p={slope:.3f}, s={exponent:.3f}, "
        f"residual={residual:.3g}, status={status}"
    )
    return RegularityEstimate(slope, exponent, (lo, hi), residual, decades, status, label)


def _excluded(value: float, target: float) -> bool:
    return math.isfinite(value) and abs(value - target) <= 1e-12


def fact_a_exponent(s1: float, s2: float, eps: float = 0.125) -> float:
    """
    Sobolev exponent of a product of H^s1 and H^s2 functions on the plane

    min(s1, s2, s1 + s2 - 1), lowered by eps when s1 or s2 equals +-1 or
    s1 + s2 = 0.

    Args:
        s1, s2: Factor exponents with s1 + s2 >= 0 (math.inf for a smooth factor)
        eps: Loss at the excluded exponents (r/4 by convention)

    Returns:
        Product exponent s0
    """
    if s1 + s2 < 0:
        raise ValueError(f"product rule needs s1 + s2 >= 0, got {s1} + {s2}")
    excluded = any(_excluded(s, t) for s in (s1, s2) for t in (1.0, -1.0)) or _excluded(s1 + s2, 0.0)
    cross = s1 + s2 - 1.0 - (eps if excluded else 0.0)
    return float(min(s1, s2, cross))


def prescribed_regularity_field(
    grid: LateralGrid, s: float, rng: np.random.Generator, delta: float = RANDOM_FIELD_DELTA
) -> Field:
    """
    Real random field in H^s' exactly for s' < s + delta

    Spectrum |F_k| = (1 + |xi_k|^2)^(-(s + d/2 + delta)/2) with uniform random
    phases, normalized to unit L^2 norm.
    """
    amplitude = (1.0 + grid.xi_squared) ** (-(s + grid.dimension / 2.0 + delta) / 2.0)
    phases = np.exp(2j * np.pi * rng.random(grid.shape))
    values = _inverse(grid, amplitude * phases).real
    values = values / np.sqrt(grid.cell_measure * np.sum(values ** 2))
    return Field(grid, values)


@dataclass
class TrialResult:
    trial: int
    seed: int
    exponent: Optional[float]
    status: str
    passed: bool


@dataclass
class CheckReport:
    """Empirical product-rule check over seeded trials"""
    s1: Optional[float]
    s2: float
    predicted: float
    tolerance: float
    trials: List[TrialResult] = field(default_factory=list)
    required_fraction: float = 0.8

    @property
    def pass_fraction(self) -> float:
        if not self.trials:
            return 0.0
        return sum(t.passed for t in self.trials) / len(self.trials)

    @property
    def passed(self) -> bool:
        return self.pass_fraction >= self.required_fraction

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s1": "smooth" if self.s1 is None else self.s1,
            "s2": self.s2,
            "predicted": self.predicted,
            "tolerance": self.tolerance,
            "pass_fraction": self.pass_fraction,
            "required_fraction": self.required_fraction,
            "passed": self.passed,
            "trials": [asdict(t) for t in self.trials],
        }


def product_regularity_check(
    s1: float,
    s2: float,
    trials: int,
    grid: LateralGrid,
    base_seed: int = 0,
    tolerance: float = 0.2,
    eps: float = 0.125,
    required_fraction: float = 0.8,
    fit_range: Optional[Tuple[float, float]] = None,
    min_decades: float = 0.9,
    workers: int = 1,
) -> CheckReport:
    """
    Multiply random fields of prescribed regularity and compare the product's
    estimated exponent with the planar product rule

    Args:
        s1: Exponent of the first factor; math.inf uses a smooth Gaussian factor
        s2: Exponent of the second factor
        trials: Number of seeded trials (seed = base_seed + trial)
        grid: Two-dimensional grid
        tolerance: Trial passes when the estimate is >= predicted - tolerance
        workers: Trials run concurrently on this many threads

    Returns:
        CheckReport
    """
    if grid.dimension != 2:
        raise StructuralError("product regularity check is defined on planar grids")
    predicted = fact_a_exponent(s1, s2, eps)
    smooth_factor = not math.isfinite(s1)

    def run_trial(trial: int) -> TrialResult:
        seed = base_seed + trial
        rng = np.random.default_rng(seed)
        if smooth_factor:
            first = Field(grid, gaussian_profile(grid, width=grid.length / 20.0))
        else:
            first = prescribed_regularity_field(grid, s1, rng)
        second = prescribed_regularity_field(grid, s2, rng)
        product = Field(grid, first.values * second.values)
        estimate = estimate_sobolev_exponent(product, fit_range, min_decades, label=f"trial {trial}")
        passed = estimate.status == "smooth" or (
            estimate.status == "ok" and estimate.exponent >= predicted - tolerance
        )
        exponent = estimate.exponent if math.isfinite(estimate.exponent) else None
        return TrialResult(trial, seed, exponent, estimate.status, passed)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(run_trial, range(trials)))

    report = CheckReport(
        s1=None if smooth_factor else s1,
        s2=s2,
        predicted=predicted,
        tolerance=tolerance,
        trials=results,
        required_fraction=required_fraction,
    )
    logger.info(
        f"Product rule s1={s1}, s2={s2}: predicted s0={predicted:.3f}, "
        f"{report.pass_fraction:.0%} of {trials} trials pass"
    )
    return report
