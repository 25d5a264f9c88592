"""Periodic spectral discretization of the lateral domain"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from ..core.errors import StructuralError
from ..core.utils import is_power_of_two

SOBOLEV_RANGE = (-4.0, 4.0)


@dataclass(frozen=True)
class LateralGrid:
    """Cell-centered periodic grid on the torus [-L/2, L/2)^d"""
    dimension: int
    points: int
    length: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise StructuralError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.points < 8 or not is_power_of_two(self.points):
            raise StructuralError(f"points per axis must be a power of two >= 8, got {self.points}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise StructuralError(f"physical length must be positive, got {self.length}")
        object.__setattr__(self, "length", float(self.length))

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def size(self) -> int:
        return self.points ** self.dimension

    @property
    def cell_measure(self) -> float:
        """Riemann-sum weight h^d"""
        return self.spacing ** self.dimension

    @property
    def volume(self) -> float:
        return self.length ** self.dimension

    @property
    def xi_nyquist(self) -> float:
        return np.pi * self.points / self.length

    @cached_property
    def axis(self) -> np.ndarray:
        """Sample coordinates x_j = -L/2 + (j + 1/2) h"""
        return -0.5 * self.length + (np.arange(self.points) + 0.5) * self.spacing

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dimension), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x ** 2 for x in self.mesh))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular frequencies per axis in FFT order"""
        return 2.0 * np.pi * sfft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def frequency_table(self) -> np.ndarray:
        """xi_k for k = -N/2 .. N/2-1"""
        return sfft.fftshift(self.wavenumbers)

    @cached_property
    def derivative_symbol(self) -> np.ndarray:
        """i*xi per axis with the unpaired Nyquist mode zeroed"""
        xi = self.wavenumbers.copy()
        xi[self.points // 2] = 0.0
        return 1j * xi

    @cached_property
    def frequency_mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.wavenumbers] * self.dimension), indexing="ij"))

    @cached_property
    def xi_squared(self) -> np.ndarray:
        """|xi|^2 on the full spectral mesh"""
        return sum(k ** 2 for k in self.frequency_mesh)

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_squared)

    @cached_property
    def laplace_symbol(self) -> np.ndarray:
        """Symbol of sum_j D_j D_j (Nyquist rows removed), i.e. -|xi|^2 off the Nyquist planes"""
        symbol = np.zeros(self.shape)
        d = self.derivative_symbol
        for axis in range(self.dimension):
            symbol = symbol + _along(d * d, axis, self.dimension).real
        return symbol

    def check_axis(self, axis: int) -> None:
        if not 0 <= axis < self.dimension:
            raise StructuralError(f"axis {axis} out of range for a {self.dimension}-d grid")

    def to_dict(self) -> Dict[str, Any]:
        return {"d": self.dimension, "N": self.points, "L": self.length}


def _along(vector: np.ndarray, axis: int, dimension: int) -> np.ndarray:
    """Reshape a 1-d vector to broadcast along one axis"""
    shape = [1] * dimension
    shape[axis] = vector.size
    return vector.reshape(shape)


@dataclass(frozen=True, eq=False)
class Field:
    """Lateral sample at fixed depth z and frequency tau"""
    grid: LateralGrid
    values: np.ndarray
    z: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.grid.shape:
            if values.size == self.grid.size and values.ndim == 1:
                values = values.reshape(self.grid.shape)
            else:
                raise StructuralError(
                    f"field of shape {values.shape} does not match grid shape {self.grid.shape}"
                )
        if not np.all(np.isfinite(values)):
            raise StructuralError(f"non-finite values in field at z={self.z}, tau={self.tau}")
        if self.z < 0:
            raise StructuralError(f"depth must be nonnegative, got {self.z}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "z", float(self.z))
        object.__setattr__(self, "tau", float(self.tau))

    @classmethod
    def zeros(cls, grid: LateralGrid, z: float = 0.0, tau: float = 0.0, complex_: bool = True) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=complex if complex_ else float), z, tau)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values, self.z, self.tau)

    def at(self, z: Optional[float] = None, tau: Optional[float] = None) -> "Field":
        return Field(
            self.grid,
            self.values,
            self.z if z is None else z,
            self.tau if tau is None else tau,
        )

    def check_grid(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise StructuralError(f"grid mismatch: {self.grid} vs {other.grid}")

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values) or bool(np.all(self.values.imag == 0))

    def l2_norm(self) -> float:
        """Discrete L^2 norm with Riemann-sum measure"""
        return float(np.sqrt(self.grid.cell_measure * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "Field") -> complex:
        """<self, other> = h^d sum self * conj(other)"""
        self.check_grid(other)
        return complex(self.grid.cell_measure * np.vdot(other.values, self.values))

    def __add__(self, other: "Field") -> "Field":
        self.check_grid(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self.check_grid(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: complex) -> "Field":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Unitary-normalized Fourier coefficients of a Field (FFT order)"""
    grid: LateralGrid
    coefficients: np.ndarray
    z: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if np.shape(self.coefficients) != self.grid.shape:
            raise StructuralError(
                f"spectrum of shape {np.shape(self.coefficients)} does not match grid {self.grid.shape}"
            )

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def power(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2


def _forward(grid: LateralGrid, values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, norm="ortho") * grid.cell_measure ** 0.5


def _inverse(grid: LateralGrid, coefficients: np.ndarray) -> np.ndarray:
    return sfft.ifftn(coefficients, norm="ortho") / grid.cell_measure ** 0.5


def fourier_forward(f: Field) -> SpectralField:
    """Forward transform with ||f||_L2 = ||F||_l2"""
    return SpectralField(f.grid, _forward(f.grid, f.values), f.z, f.tau)


def fourier_inverse(spectrum: SpectralField, real: bool = False) -> Field:
    """Inverse of fourier_forward; real=True drops the (roundoff) imaginary part"""
    values = _inverse(spectrum.grid, spectrum.coefficients)
    if real:
        values = values.real
    return Field(spectrum.grid, values, spectrum.z, spectrum.tau)


def derivative_values(grid: LateralGrid, values: np.ndarray, axis: int) -> np.ndarray:
    """Spectral D_axis of raw samples (complex output)"""
    multiplier = _along(grid.derivative_symbol, axis, grid.dimension)
    return sfft.ifft(sfft.fft(values, axis=axis) * multiplier, axis=axis)


def spectral_derivative(f: Field, axis: int) -> Field:
    """Multiply the spectrum by i*xi along axis (Nyquist zeroed)"""
    f.grid.check_axis(axis)
    values = derivative_values(f.grid, f.values, axis)
    if f.is_real:
        values = values.real
    return f.with_values(values)


def gradient(f: Field) -> List[Field]:
    return [spectral_derivative(f, axis) for axis in range(f.grid.dimension)]


def _sobolev_weight(grid: LateralGrid, s: float) -> np.ndarray:
    return (1.0 + grid.xi_squared) ** s


def _check_order(s: float) -> None:
    lo, hi = SOBOLEV_RANGE
    if not lo <= s <= hi:
        raise ValueError(f"Sobolev order {s} outside supported range [{lo}, {hi}]")


def sobolev_norm(f: Field, s: float, band: Optional[float] = None) -> float:
    """
    Discrete H^s norm (sum_k (1 + |xi_k|^2)^s |F_k|^2)^(1/2)

    Args:
        f: Field to measure
        s: Sobolev order in [-4, 4]
        band: Optional cut-off; only modes with |xi| <= band contribute

    Returns:
        Nonnegative norm value
    """
    _check_order(s)
    power = fourier_forward(f).power()
    weighted = _sobolev_weight(f.grid, s) * power
    if band is not None:
        weighted = np.where(f.grid.xi_abs <= band, weighted, 0.0)
    return float(np.sqrt(np.sum(weighted)))


@dataclass
class SobolevReport:
    """Ordered (s, norm) pairs for one field"""
    entries: List[Tuple[float, float]] = field(default_factory=list)
    z: float = 0.0
    tau: float = 0.0

    @property
    def orders(self) -> List[float]:
        return [s for s, _ in self.entries]

    @property
    def norms(self) -> List[float]:
        return [n for _, n in self.entries]

    def is_monotone(self) -> bool:
        norms = self.norms
        return all(b >= a * (1 - 1e-14) for a, b in zip(norms, norms[1:]))

    def to_list(self) -> List[Dict[str, float]]:
        """JSON artifact: array of {s, norm} in increasing s"""
        return [{"s": s, "norm": n} for s, n in self.entries]


def sobolev_spectrum(f: Field, s_values: Sequence[float]) -> SobolevReport:
    """sobolev_norm evaluated over a list of orders, sorted by s"""
    orders = sorted(float(s) for s in s_values)
    if not orders:
        raise ValueError("s_values must be nonempty")
    for s in orders:
        _check_order(s)

    power = fourier_forward(f).power()
    entries = [(s, float(np.sqrt(np.sum(_sobolev_weight(f.grid, s) * power)))) for s in orders]
    return SobolevReport(entries=entries, z=f.z, tau=f.tau)


def project_band(f: Field, xi_max: float) -> Field:
    """Zero all Fourier modes with |xi| > xi_max"""
    spectrum = _forward(f.grid, f.values)
    spectrum = np.where(f.grid.xi_abs <= xi_max, spectrum, 0.0)
    values = _inverse(f.grid, spectrum)
    if f.is_real:
        values = values.real
    return f.with_values(values)
