"""Per-frequency solves assembled into the space-time solution"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft

from ..core.errors import ConfigError, MeshAlignmentError, StructuralError, SynthesisError
from ..core.logger import logger
from ..core.utils import is_power_of_two
from ..medium.medium import Medium, evaluate_c
from ..spectral.lateral_grid import Field, LateralGrid
from ..spectral.profiles import profile_from_spec
from .propagator import EvolutionConfig, PropagationTrace, mild_solve, stationary_mild_solve

SYMMETRY_TOL = 1e-10
TRAVEL_TIME_NODES = 64
PARITIES = ("odd", "even")

FrequencySource = Callable[[float, float], Union[Field, np.ndarray, None]]


@dataclass(frozen=True)
class FrequencyConfig:
    """Uniform tau sampling over [-tau_max, tau_max)"""
    samples: int = 16
    tau_max: float = 4.0
    filter: Optional[Dict[str, Any]] = None
    z_values: Optional[List[float]] = None
    parity: str = "odd"

    def __post_init__(self):
        if self.samples < 2 or not is_power_of_two(self.samples):
            raise ConfigError(f"number of tau samples must be a power of two >= 2, got {self.samples}")
        if not self.tau_max > 0:
            raise ConfigError(f"tau_max must be positive, got {self.tau_max}")
        if self.parity not in PARITIES:
            raise ConfigError(f"parity must be one of {PARITIES}, got {self.parity!r}")


def tau_grid(samples: int, tau_max: float) -> np.ndarray:
    """tau_j = -tau_max + j * dtau, dtau = 2 tau_max / M"""
    return -tau_max + np.arange(samples) * (2.0 * tau_max / samples)


@dataclass
class FrequencyBundle:
    """Fields indexed by the sampled frequencies"""
    taus: np.ndarray
    fields: List[Field]

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        size = self.taus.size
        if size < 2 or not is_power_of_two(size):
            raise StructuralError(f"bundle needs a power-of-two number of frequencies, got {size}")
        if len(self.fields) != size:
            raise StructuralError(f"{len(self.fields)} fields for {size} frequencies")
        steps = np.diff(self.taus)
        if not np.allclose(steps, steps[0], rtol=1e-12, atol=0):
            raise StructuralError("tau samples must be uniformly spaced")
        grid = self.fields[0].grid
        if any(f.grid != grid for f in self.fields):
            raise StructuralError("bundle fields must share one grid")

    @property
    def grid(self) -> LateralGrid:
        return self.fields[0].grid

    @property
    def size(self) -> int:
        return self.taus.size

    @property
    def delta_tau(self) -> float:
        return float(self.taus[1] - self.taus[0])

    @property
    def delta_t(self) -> float:
        return 2.0 * np.pi / (self.size * self.delta_tau)

    @property
    def times(self) -> np.ndarray:
        """Centered time axis t_m = (m - M/2) dt"""
        return (np.arange(self.size) - self.size // 2) * self.delta_t

    def stack(self) -> np.ndarray:
        return np.stack([f.values for f in self.fields]).astype(complex)

    @property
    def conjugate_symmetric(self) -> bool:
        """F(-tau) = conj(F(tau)) on all pairs, and real at the unpaired -tau_max sample"""
        return is_conjugate_symmetric(self.stack())

    @classmethod
    def from_stack(cls, taus: np.ndarray, values: np.ndarray, grid: LateralGrid, z: float = 0.0) -> "FrequencyBundle":
        return cls(taus, [Field(grid, values[j], z=z, tau=float(t)) for j, t in enumerate(taus)])

    @classmethod
    def zeros(cls, grid: LateralGrid, cfg: FrequencyConfig) -> "FrequencyBundle":
        taus = tau_grid(cfg.samples, cfg.tau_max)
        return cls(taus, [Field.zeros(grid, tau=float(t)) for t in taus])


def is_conjugate_symmetric(stack: np.ndarray, tol: float = SYMMETRY_TOL, check_unpaired: bool = True) -> bool:
    """stack[j] = conj(stack[M - j]) for j >= 1; check_unpaired also asks for a real -tau_max sample"""
    size = stack.shape[0]
    scale = max(float(np.max(np.abs(stack))), 1e-300)
    mirrored = np.conj(stack[(size - np.arange(1, size))])
    if np.max(np.abs(stack[1:] - mirrored), initial=0.0) > tol * scale:
        return False
    if not check_unpaired:
        return True
    return float(np.max(np.abs(stack[0].imag), initial=0.0)) <= tol * scale


def synthesize(stack: np.ndarray, delta_tau: float) -> np.ndarray:
    """
    Inverse partial Fourier transform along axis 0

    u(t_m) = (dtau / 2 pi) sum_j exp(i tau_j t_m) v(tau_j) on the centered grids.
    """
    size = stack.shape[0]
    delta_t = 2.0 * np.pi / (size * delta_tau)
    shifted = sfft.ifftshift(stack, axes=0)
    return sfft.fftshift(sfft.ifft(shifted, axis=0), axes=0) / delta_t


def analyze_time(series: np.ndarray, delta_t: float) -> np.ndarray:
    """Inverse of synthesize: v(tau_j) = dt sum_m exp(-i tau_j t_m) u(t_m)"""
    shifted = sfft.ifftshift(series, axes=0)
    return delta_t * sfft.fftshift(sfft.fft(shifted, axis=0), axes=0)


def circular_time_convolution(series: np.ndarray, kernel: np.ndarray, delta_t: float) -> np.ndarray:
    """(u * k)(t_m) = dt sum_j u(t_j) k(t_m - t_j) on the periodic centered time grid"""
    size = series.shape[0]
    if kernel.shape[0] != size:
        raise StructuralError("kernel and series must share the time grid")
    result = np.zeros_like(series, dtype=complex)
    shape = (size,) + (1,) * (series.ndim - 1)
    for j in range(size):
        lagged = kernel[(np.arange(size) - j + size // 2) % size].reshape(shape)
        result += series[j] * lagged
    return delta_t * result


def filter_function(spec: Optional[Dict[str, Any]]) -> Callable[[float], complex]:
    """Frequency weight chi(tau) from a config block"""
    if not spec:
        return lambda tau: 1.0
    kind = spec.get("kind", "none")
    if kind == "none":
        return lambda tau: 1.0
    if kind == "gaussian":
        width = float(spec.get("width", 1.0))
        return lambda tau: math.exp(-0.5 * (tau / width) ** 2)
    if kind == "indicator":
        cutoff = float(spec.get("cutoff", 1.0))
        return lambda tau: 1.0 if abs(tau) <= cutoff else 0.0
    raise ConfigError(f"Unknown filter kind '{kind}'")


def apply_frequency_filter(bundle: FrequencyBundle, chi: Callable[[float], complex]) -> FrequencyBundle:
    """Multiply every field by chi(tau)"""
    weights = [complex(chi(float(t))) for t in bundle.taus]
    if not all(np.isfinite(w) for w in weights):
        raise ValueError("frequency filter must be finite on the tau grid")
    return FrequencyBundle(bundle.taus.copy(), [f * w for f, w in zip(bundle.fields, weights)])


def time_kernel(bundle: FrequencyBundle, chi: Callable[[float], complex]) -> np.ndarray:
    """Discrete inverse transform of chi on the bundle's grids"""
    weights = np.array([complex(chi(float(t))) for t in bundle.taus])
    return synthesize(weights, bundle.delta_tau)


def travel_time(m: Medium, z: float, tau: float, grid: LateralGrid,
                nodes_per_unit: int = TRAVEL_TIME_NODES) -> np.ndarray:
    """T(z, x) = int_0^z dz' / c(z', x, tau) by the composite trapezoid rule"""
    if z < 0:
        raise ValueError(f"depth must be nonnegative, got {z}")
    if z == 0:
        return np.zeros(grid.shape)
    intervals = max(1, int(math.ceil(nodes_per_unit * z)))
    nodes = np.linspace(0.0, z, intervals + 1)
    inverse = [1.0 / evaluate_c(m, zn, tau, grid).values for zn in nodes]
    h = z / intervals
    return h * (0.5 * inverse[0] + sum(inverse[1:-1]) + 0.5 * inverse[-1])


def comoving_transform(u: Field, m: Medium, direction: int = 1,
                       nodes_per_unit: int = TRAVEL_TIME_NODES) -> Field:
    """Multiply by exp(direction * i tau T(z, x)); directions +1 and -1 are inverse to each other"""
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    phase = travel_time(m, u.z, u.tau, u.grid, nodes_per_unit)
    return u.with_values(u.values * np.exp(1j * direction * u.tau * phase))


@dataclass
class SpaceTimeSolution:
    """u(z, t, x) at requested depths"""
    grid: LateralGrid
    taus: np.ndarray
    times: np.ndarray
    z_values: List[float]
    values: Dict[float, np.ndarray] = field(default_factory=dict)
    real: Dict[float, bool] = field(default_factory=dict)
    traces: List[PropagationTrace] = field(default_factory=list)
    filter: Optional[Dict[str, Any]] = None
    parity: str = "odd"

    def slices(self, z: float) -> List[Field]:
        """One Field per time sample at depth z"""
        return [Field(self.grid, frame, z=z) for frame in self.values[z]]

    def manifest(self) -> Dict[str, Any]:
        return {
            "z_values": list(self.z_values),
            "t_values": self.times.tolist(),
            "tau_grid": self.taus.tolist(),
            "filter": self.filter,
            "parity": self.parity,
            "real": {repr(z): self.real[z] for z in self.z_values},
            "grid": self.grid.to_dict(),
        }


def solve_full(
    m: Medium,
    v0: FrequencyBundle,
    g: Optional[FrequencySource],
    cfg: EvolutionConfig,
    z_values: Optional[Sequence[float]] = None,
    workers: int = 1,
    filter_spec: Optional[Dict[str, Any]] = None,
    parity: str = "odd",
) -> SpaceTimeSolution:
    """
    Mild solve per tau on a worker pool, then inverse transform along tau

    With parity "odd" the generator at tau is sign(tau) A(|tau|): tau > 0 runs
    mild_solve, tau < 0 runs it at |tau| on conjugated data and source and
    conjugates the result, tau = 0 integrates the source alone. Conjugate-
    symmetric data and source then give conjugate-symmetric solutions, and u
    is real. The -tau_max sample has no partner on the grid; like the Nyquist
    bin of a real transform, only its real part enters a real u. With parity
    "even" every tau runs mild_solve with A(tau) itself, and u is reported
    real only when the evolved stack happens to be symmetric.

    Args:
        m: Medium
        v0: Initial data bundle
        g: Source g(z, tau) returning lateral samples, or None
        cfg: Depth discretization shared by all frequencies
        z_values: Output depths on the macro mesh (default [Z])
        workers: Thread pool size
        filter_spec: Frequency filter applied to data and source
        parity: "odd" or "even" extension of the generator to tau < 0

    Returns:
        SpaceTimeSolution
    """
    if parity not in PARITIES:
        raise ConfigError(f"parity must be one of {PARITIES}, got {parity!r}")
    depths = [float(z) for z in (z_values if z_values is not None else [cfg.depth_end])]
    for z in depths:
        if not cfg.is_macro_node(z) or not 0 <= z <= cfg.depth_end * (1 + 1e-12):
            raise MeshAlignmentError(f"output depth {z} is not on the macro mesh")
    node_index = [int(round(z / cfg.macro_step)) for z in depths]

    chi = filter_function(filter_spec)
    data = apply_frequency_filter(v0, chi) if filter_spec else v0
    grid = data.grid

    def task(index: int) -> Tuple[List[Field], PropagationTrace]:
        tau = float(data.taus[index])
        weight = complex(chi(tau))
        source = None
        if g is not None:
            def source(rho: float, tau=tau, weight=weight):
                sample = g(rho, tau)
                if sample is None:
                    return np.zeros(grid.shape, dtype=complex)
                values = sample.values if isinstance(sample, Field) else np.asarray(sample)
                return values * weight
        initial = data.fields[index]
        if parity == "even" or tau > 0:
            return mild_solve(m, tau, initial, source, cfg)
        if tau == 0:
            return stationary_mild_solve(tau, initial, source, cfg)

        mirrored = None
        if source is not None:
            def mirrored(rho: float, source=source):
                return np.conj(source(rho))
        trajectory, trace = mild_solve(m, -tau, initial.with_values(np.conj(initial.values)), mirrored, cfg)
        trace.tau = tau
        return [Field(grid, np.conj(f.values), z=f.z, tau=tau) for f in trajectory], trace

    failures: Dict[float, str] = {}
    results: Dict[int, Tuple[List[Field], PropagationTrace]] = {}
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {index: pool.submit(task, index) for index in range(data.size)}
        for index, future in futures.items():
            try:
                results[index] = future.result()
            except Exception as e:
                failures[float(data.taus[index])] = f"{type(e).__name__}: {e}"

    if failures:
        for tau, message in sorted(failures.items()):
            logger.error(f"tau={tau:.6g} failed: {message}")
        raise SynthesisError(f"{len(failures)} of {data.size} frequency solves failed", failures)

    solution = SpaceTimeSolution(
        grid=grid,
        taus=data.taus.copy(),
        times=data.times,
        z_values=depths,
        traces=[results[i][1] for i in range(data.size)],
        filter=filter_spec,
        parity=parity,
    )
    for z, node in zip(depths, node_index):
        stack = np.stack([results[i][0][node].values for i in range(data.size)]).astype(complex)
        series = synthesize(stack, data.delta_tau)
        symmetric = is_conjugate_symmetric(stack, check_unpaired=parity == "even")
        solution.real[z] = symmetric
        solution.values[z] = series.real if symmetric else series
        if symmetric and parity == "odd":
            logger.debug(f"z={z:g}: dropped imaginary part {np.max(np.abs(series.imag)):.3g} "
                         f"of the unpaired -tau_max sample")
    logger.info(f"Synthesized {data.size} frequencies at {len(depths)} depth(s), {parity} generator")
    return solution


def envelope_function(spec: Optional[Dict[str, Any]], taus: np.ndarray) -> np.ndarray:
    """Weights of lateral data over the tau grid"""
    spec = spec or {"kind": "one"}
    kind = spec.get("kind", "one")
    if kind == "one":
        return np.ones(taus.size)
    if kind == "gaussian":
        width = float(spec.get("width", 1.0))
        center = float(spec.get("center", 0.0))
        return np.exp(-0.5 * ((taus - center) / width) ** 2)
    if kind == "single":
        target = float(spec.get("tau", 0.0))
        weights = np.zeros(taus.size)
        weights[int(np.argmin(np.abs(taus - target)))] = 1.0
        return weights
    raise ConfigError(f"Unknown tau envelope kind '{kind}'")


def bundle_from_spec(grid: LateralGrid, cfg: FrequencyConfig, spec: Optional[Dict[str, Any]],
                     rng: np.random.Generator) -> FrequencyBundle:
    """Initial bundle v0(tau) = envelope(tau) * profile(x)"""
    taus = tau_grid(cfg.samples, cfg.tau_max)
    profile = profile_from_spec(grid, spec, rng)
    weights = envelope_function((spec or {}).get("tau_envelope"), taus)
    return FrequencyBundle(taus, [Field(grid, w * profile, tau=float(t)) for w, t in zip(weights, taus)])


def source_from_spec(grid: LateralGrid, cfg: FrequencyConfig, spec: Optional[Dict[str, Any]],
                     rng: np.random.Generator) -> Optional[FrequencySource]:
    """Source g(z, tau) = envelope(tau) * depth_profile(z) * profile(x), or None"""
    if not spec or spec.get("kind", "zero") == "zero":
        return None
    taus = tau_grid(cfg.samples, cfg.tau_max)
    profile = profile_from_spec(grid, spec, rng)
    envelope = spec.get("tau_envelope") or {"kind": "one"}
    weights = dict(zip(taus.tolist(), envelope_function(envelope, taus)))
    depth = spec.get("depth_profile") or {"kind": "constant"}
    if depth.get("kind") == "constant":
        def depth_weight(z: float) -> float:
            return 1.0
    elif depth.get("kind") == "pulse":
        center = float(depth.get("center", 0.5))
        width = float(depth.get("width", 0.1))

        def depth_weight(z: float) -> float:
            return math.exp(-0.5 * ((z - center) / width) ** 2)
    else:
        raise ConfigError(f"Unknown depth profile kind '{depth.get('kind')}'")

    def source(z: float, tau: float) -> np.ndarray:
        weight = weights.get(float(tau))
        if weight is None:
            # off the tau grid: evaluate the envelope directly
            weight = float(envelope_function(envelope, np.array([float(tau)]))[0])
            if envelope.get("kind") == "single" and abs(float(envelope.get("tau", 0.0)) - tau) > 1e-12:
                weight = 0.0
        return weight * depth_weight(z) * profile

    return source
