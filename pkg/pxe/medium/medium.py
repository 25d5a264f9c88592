"""Coefficient model c(z, x, tau) = c0 + sum_l c_l(z, x) h_l(tau)"""

from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import MediumValidationError, StructuralError
from ..core.logger import logger
from ..spectral.lateral_grid import Field, LateralGrid, derivative_values

ZFunction = Callable[[float], float]
LOWER_BOUND_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class FrequencySymbol:
    """Real symbol h(tau) of order m with |h| >= lower_bound near tau = 0"""
    evaluator: Callable[[float], float]
    order: float
    lower_bound: float
    kind: str = "custom"
    growth_constant: float = 1.0
    check_interval: float = 0.1
    params: Dict[str, float] = field(default_factory=dict)

    def __call__(self, tau: float) -> float:
        return float(self.evaluator(float(tau)))

    def lower_bound_holds(self, points: int = 41) -> bool:
        taus = np.linspace(-self.check_interval, self.check_interval, points)
        return all(abs(self(t)) >= self.lower_bound - LOWER_BOUND_SLACK for t in taus)

    def growth_bound_holds(self, taus: Sequence[float]) -> bool:
        """|h(tau)| <= K (1 + |tau|)^m on the sampled range"""
        return all(
            abs(self(t)) <= self.growth_constant * (1 + abs(t)) ** self.order * (1 + 1e-12)
            for t in taus
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "order": self.order, "lower_bound": self.lower_bound, **self.params}


def constant_symbol() -> FrequencySymbol:
    """h(tau) = 1"""
    return FrequencySymbol(lambda tau: 1.0, order=0.0, lower_bound=1.0, kind="one", growth_constant=1.0)


def inverse_tau_symbol(eta0: float = 0.1, check_interval: float = 0.1) -> FrequencySymbol:
    """Paraxial symbol (tau^2 + eta0^2)^(-1/2), i.e. 1/|tau| cut off below eta0"""
    if eta0 <= 0:
        raise MediumValidationError(f"symbol cut-off eta0 must be positive, got {eta0}")
    return FrequencySymbol(
        lambda tau: 1.0 / np.sqrt(tau * tau + eta0 * eta0),
        order=-1.0,
        lower_bound=1.0 / np.sqrt(check_interval ** 2 + eta0 ** 2),
        kind="inv_tau",
        growth_constant=np.sqrt(1 + eta0 ** 2) / eta0,
        check_interval=check_interval,
        params={"eta0": eta0},
    )


class CoefficientField(ABC):
    """Lateral coefficient c_l(z, x), C^1 in z"""

    kind = "abstract"
    z_step = 1e-4

    def __init__(self, declared_r: Optional[float] = None):
        self.declared_r = declared_r

    @abstractmethod
    def values(self, z: float, grid: LateralGrid) -> np.ndarray:
        """Real samples of c_l(z, .)"""

    def gradient(self, z: float, grid: LateralGrid) -> Optional[List[np.ndarray]]:
        """Analytic lateral gradient, or None when only the spectral route exists"""
        return None

    def dz(self, z: float, grid: LateralGrid) -> np.ndarray:
        """d/dz c_l by centered differences (forward near z = 0)"""
        delta = self.z_step
        if z >= delta:
            return (self.values(z + delta, grid) - self.values(z - delta, grid)) / (2 * delta)
        return (self.values(z + delta, grid) - self.values(z, grid)) / delta

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "declared_r": self.declared_r}


class ConstantCoefficient(CoefficientField):
    """Spatially and depth-uniform coefficient"""

    kind = "constant"

    def __init__(self, value: float, declared_r: Optional[float] = None):
        super().__init__(declared_r)
        self.value = float(value)

    def values(self, z: float, grid: LateralGrid) -> np.ndarray:
        return np.full(grid.shape, self.value)

    def gradient(self, z: float, grid: LateralGrid) -> Optional[List[np.ndarray]]:
        return [np.zeros(grid.shape) for _ in range(grid.dimension)]

    def dz(self, z: float, grid: LateralGrid) -> np.ndarray:
        return np.zeros(grid.shape)

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "value": self.value}


def radial_blend(r: np.ndarray, r1: float, r2: float) -> Tuple[np.ndarray, np.ndarray]:
    """Quintic cut-off (1 inside r1, 0 outside r2, C^2) and its radial derivative"""
    t = np.clip((r - r1) / (r2 - r1), 0.0, 1.0)
    blend = 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)
    slope = -30.0 * t * t * (1.0 - t) ** 2 / (r2 - r1)
    return blend, slope


class ExampleCoefficient(CoefficientField):
    """chi0(z) * blend(|x|) * rho^alpha(z), rho = (|x|^2 + eps^2)^(1/2)"""

    kind = "example"

    def __init__(
        self,
        chi0: ZFunction,
        alpha: ZFunction,
        r1: float,
        r2: float,
        eps: float = 0.0,
        chi0_dz: Optional[ZFunction] = None,
        alpha_dz: Optional[ZFunction] = None,
        declared_r: Optional[float] = None,
        params: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(declared_r)
        self.chi0 = chi0
        self.alpha = alpha
        self.r1 = float(r1)
        self.r2 = float(r2)
        self.eps = float(eps)
        self.chi0_dz = chi0_dz
        self.alpha_dz = alpha_dz
        self.params = params or {}

    def _rho(self, grid: LateralGrid) -> np.ndarray:
        return np.sqrt(grid.radius ** 2 + self.eps ** 2)

    def values(self, z: float, grid: LateralGrid) -> np.ndarray:
        blend, _ = radial_blend(grid.radius, self.r1, self.r2)
        return self.chi0(z) * blend * self._rho(grid) ** self.alpha(z)

    def gradient(self, z: float, grid: LateralGrid) -> Optional[List[np.ndarray]]:
        r = grid.radius
        rho = self._rho(grid)
        alpha = self.alpha(z)
        blend, slope = radial_blend(r, self.r1, self.r2)
        with np.errstate(divide="ignore", invalid="ignore"):
            unit = [np.where(r > 0, x / r, 0.0) for x in grid.mesh]
            power_grad = np.where(rho > 0, alpha * rho ** (alpha - 2.0), 0.0)
        return [
            self.chi0(z) * (slope * u * rho ** alpha + blend * power_grad * x)
            for u, x in zip(unit, grid.mesh)
        ]

    def dz(self, z: float, grid: LateralGrid) -> np.ndarray:
        if self.chi0_dz is None or self.alpha_dz is None:
            return super().dz(z, grid)
        blend, _ = radial_blend(grid.radius, self.r1, self.r2)
        rho = self._rho(grid)
        power = rho ** self.alpha(z)
        with np.errstate(divide="ignore"):
            log_rho = np.where(rho > 0, np.log(np.where(rho > 0, rho, 1.0)), 0.0)
        return blend * power * (self.chi0_dz(z) + self.chi0(z) * self.alpha_dz(z) * log_rho)

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "R1": self.r1, "R2": self.r2, "eps": self.eps, **self.params}


_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "cosh", "sinh",
                 "arctan", "arctan2", "where", "maximum", "minimum", "clip", "pi")
}


class ExpressionCoefficient(CoefficientField):
    """Coefficient given as a numpy expression in x, y, r and z"""

    kind = "expr"

    def __init__(self, expression: str, declared_r: Optional[float] = None):
        super().__init__(declared_r)
        self.expression = expression
        try:
            self._code = compile(expression, "<medium expr>", "eval")
        except SyntaxError as e:
            raise MediumValidationError(f"Invalid coefficient expression '{expression}': {e}") from e

    def values(self, z: float, grid: LateralGrid) -> np.ndarray:
        namespace = dict(_EXPR_NAMESPACE)
        namespace["x"] = grid.mesh[0]
        namespace["y"] = grid.mesh[1] if grid.dimension == 2 else np.zeros(grid.shape)
        namespace["r"] = grid.radius
        namespace["z"] = float(z)
        try:
            result = eval(self._code, {"__builtins__": {}}, namespace)
        except Exception as e:
            raise MediumValidationError(f"Cannot evaluate '{self.expression}' at z={z}: {e}") from e
        result = np.broadcast_to(np.asarray(result), grid.shape)
        if np.iscomplexobj(result):
            if np.max(np.abs(result.imag)) > 1e-12:
                raise MediumValidationError(f"Coefficient '{self.expression}' is not real-valued")
            result = result.real
        return np.array(result, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {**super().to_dict(), "expr": self.expression}


@dataclass(frozen=True, eq=False)
class MediumTerm:
    coefficient: CoefficientField
    symbol: FrequencySymbol


@dataclass(frozen=True, eq=False)
class Medium:
    """Immutable medium description"""
    c0: float
    terms: Tuple[MediumTerm, ...] = ()
    declared_r: Optional[float] = None
    name: str = "medium"

    def __post_init__(self):
        if not np.isfinite(self.c0) or self.c0 <= 0:
            raise MediumValidationError(f"c0 must be positive, got {self.c0}")
        if self.declared_r is not None and not 0 < self.declared_r < 1:
            raise MediumValidationError(f"declared r must lie in (0, 1), got {self.declared_r}")
        object.__setattr__(self, "terms", tuple(self.terms))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "c0": self.c0,
            "r": self.declared_r,
            "terms": [
                {**t.coefficient.to_dict(), "symbol": t.symbol.to_dict()} for t in self.terms
            ],
        }


def _check_depth(z: float) -> None:
    if z < 0:
        raise StructuralError(f"depth must be nonnegative, got {z}")


def _raw_c(m: Medium, z: float, tau: float, grid: LateralGrid) -> np.ndarray:
    c = np.full(grid.shape, float(m.c0))
    for term in m.terms:
        c = c + term.coefficient.values(z, grid) * term.symbol(tau)
    return c


def evaluate_c(m: Medium, z: float, tau: float, grid: LateralGrid, check: bool = True) -> Field:
    """c(z, ., tau) sampled on the grid"""
    _check_depth(z)
    c = _raw_c(m, z, tau, grid)
    if check:
        minimum = float(np.min(c))
        if minimum < m.c0 - LOWER_BOUND_SLACK:
            raise MediumValidationError(
                f"lower bound c >= c0 = {m.c0} violated at (z={z}, tau={tau}): min c = {minimum:.6g}",
                z=z,
                tau=tau,
            )
    return Field(grid, c, z, tau)


def evaluate_grad_c(
    m: Medium, z: float, tau: float, grid: LateralGrid, route: str = "auto"
) -> List[Field]:
    """
    Lateral gradient of c

    Args:
        m: Medium
        z, tau: Frozen parameters
        grid: Lateral grid
        route: "auto" uses analytic term gradients where registered, "analytic"
            requires them, "spectral" differentiates the sampled field

    Returns:
        d real Fields
    """
    _check_depth(z)
    if route not in ("auto", "analytic", "spectral"):
        raise ValueError(f"unknown gradient route '{route}'")

    components = [np.zeros(grid.shape) for _ in range(grid.dimension)]
    for term in m.terms:
        h = term.symbol(tau)
        analytic = None if route == "spectral" else term.coefficient.gradient(z, grid)
        if analytic is None:
            if route == "analytic":
                raise StructuralError(f"no analytic gradient for '{term.coefficient.kind}' coefficient")
            samples = term.coefficient.values(z, grid)
            analytic = [derivative_values(grid, samples, axis).real for axis in range(grid.dimension)]
        components = [c + h * g for c, g in zip(components, analytic)]
    return [Field(grid, comp, z, tau) for comp in components]


def evaluate_dz_c(m: Medium, z: float, tau: float, grid: LateralGrid) -> Field:
    """d/dz c(z, ., tau)"""
    _check_depth(z)
    dz = np.zeros(grid.shape)
    for term in m.terms:
        dz = dz + term.coefficient.dz(z, grid) * term.symbol(tau)
    return Field(grid, dz, z, tau)


def _as_zfunction(value: Union[float, ZFunction]) -> ZFunction:
    if callable(value):
        return value
    constant = float(value)
    return lambda z: constant


def build_example_medium(
    c0: float,
    chi0: Union[float, ZFunction],
    alpha: Union[float, ZFunction],
    r1: float,
    r2: float,
    regularize_eps: float = 0.0,
    declared_r: Optional[float] = None,
    symbol: Optional[FrequencySymbol] = None,
    length: Optional[float] = None,
    z_samples: Optional[Sequence[float]] = None,
    chi0_dz: Optional[ZFunction] = None,
    alpha_dz: Optional[ZFunction] = None,
    name: str = "example",
) -> Medium:
    """
    Benchmark medium c0 + chi(z, x) |x|^alpha(z) h(tau)

    Args:
        c0: Background value
        chi0: Inner amplitude (constant or callable of z), C^1 and nonnegative
        alpha: Exponent (constant or callable of z), bounded below by alpha_0 > 0
        r1, r2: Radii of the quintic cut-off, 0 < r1 < r2 (< L/2 when length given)
        regularize_eps: Replaces |x| by (|x|^2 + eps^2)^(1/2)
        declared_r: Regularity exponent; defaults to 0.9 * min(alpha_0, 1)
        symbol: Frequency symbol (default h = 1)
        length: Lateral period used to check the support condition
        z_samples: Depths at which alpha and chi0 are checked (default [0, 1])
        chi0_dz, alpha_dz: Analytic z-derivatives; finite differences otherwise

    Returns:
        Single-term Medium
    """
    if not 0 < r1 < r2:
        raise MediumValidationError(f"radii must satisfy 0 < R1 < R2, got R1={r1}, R2={r2}")
    if length is not None and not r2 < length / 2:
        raise MediumValidationError(f"R2={r2} must be below L/2={length / 2}")
    if regularize_eps < 0:
        raise MediumValidationError(f"regularize_eps must be nonnegative, got {regularize_eps}")

    chi0_fn = _as_zfunction(chi0)
    alpha_fn = _as_zfunction(alpha)
    if chi0_dz is None and not callable(chi0):
        chi0_dz = lambda z: 0.0  # noqa: E731
    if alpha_dz is None and not callable(alpha):
        alpha_dz = lambda z: 0.0  # noqa: E731

    samples = list(z_samples) if z_samples is not None else list(np.linspace(0.0, 1.0, 11))
    alpha0 = min(alpha_fn(z) for z in samples)
    if alpha0 <= 0:
        raise MediumValidationError(f"alpha must stay positive, min over samples is {alpha0}")
    if min(chi0_fn(z) for z in samples) < 0:
        raise MediumValidationError("chi0 must be nonnegative")

    if declared_r is None:
        declared_r = 0.9 * min(alpha0, 1.0)
    if not 0 < declared_r < min(alpha0, 1.0) + LOWER_BOUND_SLACK:
        logger.warning(f"declared r={declared_r} is not below alpha_0={alpha0}")

    params = {
        "alpha0": alpha0,
        "chi0": chi0 if not callable(chi0) else "callable",
        "alpha": alpha if not callable(alpha) else "callable",
    }
    coefficient = ExampleCoefficient(
        chi0_fn, alpha_fn, r1, r2, regularize_eps,
        chi0_dz=chi0_dz, alpha_dz=alpha_dz, declared_r=declared_r, params=params,
    )
    return Medium(
        c0=c0,
        terms=(MediumTerm(coefficient, symbol or constant_symbol()),),
        declared_r=declared_r,
        name=name,
    )


CLAUSE_STATUSES = ("pass", "fail", "inconclusive")


@dataclass
class ClauseResult:
    """Outcome of one clause of the coefficient assumptions"""
    clause: str
    passed: bool
    message: str = ""
    details: Dict[str, Any] = field(default_factory=dict)
    status: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.passed else "fail"
        if self.status not in CLAUSE_STATUSES:
            raise ValueError(f"unknown clause status '{self.status}'")
        self.passed = self.status == "pass"


@dataclass
class TailConsistencyCheck:
    """Tail exponents of c - c0 and of 1/c - 1/c0 at one (z, tau)"""
    z: float
    tau: float
    coefficient: Dict[str, Any]
    reciprocal: Dict[str, Any]
    expected: Optional[float]
    exponent_tol: float
    reciprocal_tol: float
    status: str
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "passed": self.passed}


@dataclass
class ValidationReport:
    """Per-clause validation of a Medium"""
    medium: str
    clauses: Dict[str, ClauseResult] = field(default_factory=dict)
    tail_checks: List[TailConsistencyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status == "pass" for c in self.clauses.values())

    @property
    def failed(self) -> List[str]:
        return sorted(k for k, c in self.clauses.items() if c.status == "fail")

    @property
    def inconclusive(self) -> List[str]:
        return sorted(k for k, c in self.clauses.items() if c.status == "inconclusive")

    @property
    def hard_failures(self) -> List[str]:
        """Clauses whose failure makes the medium unusable (realness, lower bound)"""
        return [k for k in ("a", "b") if k in self.failed]

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "medium": self.medium,
            "passed": self.passed,
            "failed": self.failed,
            "inconclusive": self.inconclusive,
            "clauses": {k: asdict(v) for k, v in sorted(self.clauses.items())},
        }
        if self.tail_checks:
            data["reciprocal"] = [check.to_dict() for check in self.tail_checks]
        return data


def _difference_error(term: MediumTerm, z: float, delta: float, grid: LateralGrid) -> float:
    coefficient = term.coefficient
    quotient = (coefficient.values(z + delta, grid) - coefficient.values(z, grid)) / delta
    residual = quotient - coefficient.dz(z, grid)
    return float(np.sqrt(grid.cell_measure * np.sum(residual ** 2)))


def validate_assumption1(
    m: Medium,
    z_samples: Sequence[float],
    tau_samples: Sequence[float],
    grid: LateralGrid,
    tail_tol: float = 0.1,
    fit_range: Optional[Tuple[float, float]] = None,
    min_decades: float = 0.9,
    reciprocal_tol: Optional[float] = None,
    exponent_tol: float = 0.15,
) -> ValidationReport:
    """
    Check realness, lower bound, symbol bounds, C^1-in-z and H^(r+1) tail of a Medium

    Clause (e) is inconclusive, not passed, when a tail estimate is unresolved
    on the grid. With reciprocal_tol set, the report also carries one
    reciprocal_tail_check per (z, tau) sample; those are reported, not gating.
    """
    from ..analysis.estimators import estimate_sobolev_exponent

    z_samples = [float(z) for z in z_samples]
    tau_samples = [float(t) for t in tau_samples]
    if not z_samples or not tau_samples:
        raise ValueError("validation needs nonempty z and tau samples")

    report = ValidationReport(medium=m.name)

    # (a) realness
    complex_terms = []
    for index, term in enumerate(m.terms):
        for z in z_samples:
            values = np.asarray(term.coefficient.values(z, grid))
            if np.iscomplexobj(values) and np.max(np.abs(values.imag)) > 1e-12:
                complex_terms.append(index)
                break
        if any(not np.isfinite(term.symbol(t)) for t in tau_samples):
            complex_terms.append(index)
    report.clauses["a"] = ClauseResult(
        "a", not complex_terms,
        "coefficients and symbols are real" if not complex_terms else f"non-real terms {complex_terms}",
        {"terms": sorted(set(complex_terms))},
    )

    # (b) lower bound c >= c0
    violations = []
    worst = np.inf
    for z in z_samples:
        for tau in tau_samples:
            minimum = float(np.min(_raw_c(m, z, tau, grid)))
            worst = min(worst, minimum)
            if minimum < m.c0 - LOWER_BOUND_SLACK:
                violations.append({"z": z, "tau": tau, "min_c": minimum})
    report.clauses["b"] = ClauseResult(
        "b", not violations,
        f"min c = {worst:.6g} (c0 = {m.c0})",
        {"min_c": worst, "violations": violations},
    )

    # (c) symbol bounds
    weak_symbols = [
        index for index, term in enumerate(m.terms)
        if not (term.symbol.lower_bound_holds() and term.symbol.growth_bound_holds(tau_samples))
    ]
    report.clauses["c"] = ClauseResult(
        "c", not weak_symbols,
        "symbol bounds hold" if not weak_symbols else f"symbol bounds fail for terms {weak_symbols}",
        {"terms": weak_symbols},
    )

    # (d) C^1 in z: difference quotients converge to the registered derivative
    errors: List[Dict[str, Any]] = []
    consistent = True
    for index, term in enumerate(m.terms):
        scale = max(1.0, float(np.max(np.abs(term.coefficient.values(z_samples[0], grid)))))
        for z in z_samples:
            coarse = _difference_error(term, z, 1e-2, grid)
            fine = _difference_error(term, z, 1e-3, grid)
            errors.append({"term": index, "z": z, "coarse": coarse, "fine": fine})
            if fine > coarse + 1e-8 * scale and fine > 1e-6 * scale:
                consistent = False
    report.clauses["d"] = ClauseResult(
        "d", consistent,
        "difference quotients converge to d/dz c_l" if consistent else "z-derivative inconsistent",
        {"errors": errors},
    )

    # (e) empirical H^(r+1) tail check at every sampled depth
    if m.declared_r is None:
        report.clauses["e"] = ClauseResult("e", True, "no declared r; tail check skipped")
    else:
        target = m.declared_r + 1.0
        slopes = []
        low, unresolved = [], []
        for index, term in enumerate(m.terms):
            for z in z_samples:
                sample = Field(grid, term.coefficient.values(z, grid), z)
                estimate = estimate_sobolev_exponent(sample, fit_range, min_decades=min_decades)
                slopes.append({"term": index, "z": z, **estimate.to_dict()})
                if not estimate.reliable:
                    unresolved.append((index, z))
                elif estimate.exponent < target - tail_tol:
                    low.append((index, z))
        if low:
            status = "fail"
            message = f"tail exponent below r + 1 - {tail_tol} for (term, z) {low}"
        elif unresolved:
            status = "inconclusive"
            message = f"tail exponent not resolved for (term, z) {unresolved}"
        else:
            status = "pass"
            message = f"tail exponents >= r + 1 - {tail_tol} = {target - tail_tol:.3f}"
        report.clauses["e"] = ClauseResult(
            "e", status == "pass", message, {"target": target, "estimates": slopes}, status=status,
        )

    if reciprocal_tol is not None and any(
        not isinstance(term.coefficient, ConstantCoefficient) for term in m.terms
    ):
        report.tail_checks = [
            reciprocal_tail_check(
                m, z, tau, grid,
                reciprocal_tol=reciprocal_tol, exponent_tol=exponent_tol,
                fit_range=fit_range, min_decades=min_decades,
            )
            for z in z_samples
            for tau in tau_samples
        ]

    for key, clause in sorted(report.clauses.items()):
        logger.debug(f"Medium clause ({key}) {clause.status}: {clause.message}")
    return report


def reciprocal_map(c0: float, y: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """F(y) with 1/(c0 + y) = 1/c0 + F(y)"""
    return -y / (c0 * (c0 + y))


def reciprocal_deviation(m: Medium, z: float, tau: float, grid: LateralGrid) -> Field:
    """1/c(z, ., tau) - 1/c0, computed through the reciprocal map of c - c0"""
    c = evaluate_c(m, z, tau, grid)
    return c.with_values(reciprocal_map(m.c0, c.values - m.c0))


# radial cut-off is C^2 with a jump in the third derivative across |x| = R1, R2
BLEND_EXPONENT = 3.5


def expected_tail_exponent(m: Medium, z: float, dimension: int) -> Optional[float]:
    """
    Largest finite Sobolev exponent of c - c0 when every term has a closed form

    An unregularized example term rho^alpha lies in H^s exactly for
    s < alpha + d / 2. Returns None when a term has no closed form
    (expressions, eps > 0) or when no term is below the cut-off limit.
    """
    exponents = []
    for term in m.terms:
        coefficient = term.coefficient
        if isinstance(coefficient, ConstantCoefficient):
            continue
        if not isinstance(coefficient, ExampleCoefficient) or coefficient.eps > 0:
            return None
        alpha = float(coefficient.alpha(z))
        if coefficient.chi0(z) == 0 or (alpha / 2).is_integer():
            continue
        exponents.append(alpha + dimension / 2.0)
    exponents = [e for e in exponents if e < BLEND_EXPONENT]
    return min(exponents) if exponents else None


def reciprocal_tail_check(
    m: Medium,
    z: float,
    tau: float,
    grid: LateralGrid,
    reciprocal_tol: float = 0.15,
    exponent_tol: float = 0.15,
    fit_range: Optional[Tuple[float, float]] = None,
    min_decades: float = 0.9,
) -> TailConsistencyCheck:
    """
    Compare the Fourier tails of c - c0 and 1/c - 1/c0 at one (z, tau)

    The reciprocal map preserves Sobolev regularity, so both fitted exponents
    agree within reciprocal_tol. When c - c0 has a closed-form exponent the
    fit of c - c0 must also land within exponent_tol of it.

    Returns:
        TailConsistencyCheck with status "pass", "fail" or "inconclusive"
    """
    from ..analysis.estimators import estimate_sobolev_exponent

    c = evaluate_c(m, z, tau, grid)
    deviation = c.with_values(c.values - m.c0)
    coefficient = estimate_sobolev_exponent(deviation, fit_range, min_decades, label="c - c0")
    reciprocal = estimate_sobolev_exponent(
        c.with_values(reciprocal_map(m.c0, deviation.values)), fit_range, min_decades, label="1/c - 1/c0"
    )
    expected = expected_tail_exponent(m, z, grid.dimension)

    if not (coefficient.reliable and reciprocal.reliable):
        status, message = "inconclusive", "tail exponent not resolved on this grid"
    elif coefficient.status == "smooth" or reciprocal.status == "smooth":
        same = coefficient.status == reciprocal.status
        status = "pass" if same else "fail"
        message = "both tails smooth" if same else "only one of the two tails is smooth"
    else:
        gap = abs(reciprocal.exponent - coefficient.exponent)
        status, message = "pass", f"exponents {coefficient.exponent:.3f} and {reciprocal.exponent:.3f}"
        if gap > reciprocal_tol:
            status = "fail"
            message += f" differ by {gap:.3f} > {reciprocal_tol}"
        if expected is not None and abs(coefficient.exponent - expected) > exponent_tol:
            status = "fail"
            message += f"; c - c0 is off its closed-form exponent {expected:.3f} by more than {exponent_tol}"

    return TailConsistencyCheck(
        z=float(z),
        tau=float(tau),
        coefficient=coefficient.to_dict(),
        reciprocal=reciprocal.to_dict(),
        expected=expected,
        exponent_tol=exponent_tol,
        reciprocal_tol=reciprocal_tol,
        status=status,
        message=message,
    )
