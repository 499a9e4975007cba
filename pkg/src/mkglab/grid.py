"""Torus discretization, transforms and spatial Fourier multipliers.

All fields live on the flat torus T^n = [0, 2pi)^n sampled on N points per
axis, so Fourier frequencies are integers.  Coefficients use the normalized
forward convention

    coeffs(xi) = N^{-n} sum_x f(x) exp(-i xi.x),

stored in FFT index order.  The frequency lattice is {-N/2+1, ..., N/2}^n,
i.e. the Nyquist index carries frequency +N/2.

Zero-mode convention: negative powers of D, Riesz transforms and the inverse
Laplacian annihilate the mean.
"""

from __future__ import annotations

import enum
import os
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "MAX_LATTICE_POINTS",
    "MeanDroppedWarning",
    "Kind",
    "MultiplierSymbol",
    "TorusGrid",
    "SpectralScalar",
    "transform",
    "apply_multiplier",
    "derivative",
    "laplacian",
    "inv_laplacian",
    "dealias",
    "fft_workers",
]

MAX_LATTICE_POINTS = 2**26

# Test hook: the negative control in ``check-identities`` flips this.
RIESZ_SIGN = 1.0


class MeanDroppedWarning(UserWarning):
    """A negative-order multiplier discarded a non-negligible mean."""


def fft_workers() -> int:
    """Thread count for scipy.fft, capped by ``MKG_THREADS``."""
    env = os.environ.get("MKG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _frequencies(N: int) -> np.ndarray:
    k = np.fft.fftfreq(N, d=1.0 / N)
    k[N // 2] = N // 2
    return k


@dataclass(frozen=True)
class TorusGrid:
    """Periodic grid with 2pi period per axis.

    Parameters
    ----------
    n : int
        Spatial dimension, 1 to 4.
    N : int
        Points per axis; a power of two, at least 4.
    dealias_fraction : float
        Kept-mode fraction rho in (0, 1/2]; modes with any |xi_i| > rho*N
        are removed by :func:`dealias`.
    """

    n: int
    N: int
    dealias_fraction: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or not 1 <= self.n <= 4:
            raise ValueError(f"grid.n must be an integer in 1..4, got {self.n!r}")
        N = self.N
        if not isinstance(N, (int, np.integer)) or N < 4 or N & (N - 1):
            raise ValueError(f"grid.N must be a power of two >= 4, got {N!r}")
        if N**self.n > MAX_LATTICE_POINTS:
            raise ValueError(f"grid.N**grid.n = {N**self.n} exceeds 2**26 lattice points")
        if not 0.0 < self.dealias_fraction <= 0.5:
            raise ValueError("grid.dealias_fraction must lie in (0, 1/2]")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.n, 0))

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.N

    @property
    def size(self) -> int:
        return self.N**self.n

    @cached_property
    def k1d(self) -> np.ndarray:
        return _frequencies(self.N)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Broadcastable frequency components, one array per axis."""
        out = []
        for ax in range(self.n):
            shp = [1] * self.n
            shp[ax] = self.N
            out.append(self.k1d.reshape(shp))
        return tuple(out)

    @cached_property
    def xi2(self) -> np.ndarray:
        total = np.zeros(self.shape)
        for k in self.xi:
            total = total + k**2
        return total

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi2)

    @cached_property
    def japanese(self) -> np.ndarray:
        """<xi> = (1 + |xi|^2)^{1/2}."""
        return np.sqrt(1.0 + self.xi2)

    @cached_property
    def zero_mode(self) -> tuple[int, ...]:
        return (0,) * self.n

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.dealias_fraction * self.N
        keep = np.ones(self.shape, dtype=bool)
        for k in self.xi:
            keep = keep & (np.abs(k) <= cut)
        return keep

    @cached_property
    def inv_xi2(self) -> np.ndarray:
        """1/|xi|^2 with the zero mode mapped to 0."""
        out = np.zeros(self.shape)
        nz = self.xi2 > 0
        out[nz] = 1.0 / self.xi2[nz]
        return out

    def points(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.N) * self.h
        return tuple(np.meshgrid(*([x] * self.n), indexing="ij"))

    def fft(self, values: np.ndarray) -> np.ndarray:
        """Forward transform over the trailing ``n`` axes (batched)."""
        return sfft.fftn(values, axes=self.axes, norm="forward", workers=fft_workers())

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return sfft.ifftn(coeffs, axes=self.axes, norm="forward", workers=fft_workers())


def _hermitian_partner(coeffs: np.ndarray, n: int) -> np.ndarray:
    """coeffs(-xi) conjugated, index-wise."""
    flipped = coeffs
    for ax in range(-n, 0):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    return np.conj(flipped)


@dataclass(frozen=True, eq=False)
class SpectralScalar:
    """Complex Fourier coefficients of a field on a :class:`TorusGrid`.

    ``is_real`` asserts Hermitian symmetry ``coeffs(-xi) = conj(coeffs(xi))``,
    i.e. that the point-space field is real.
    """

    grid: TorusGrid
    coeffs: np.ndarray
    is_real: bool = False
    check: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)
        if self.check and not np.all(np.isfinite(c)):
            raise ValueError("non-finite spectral amplitude")

    @classmethod
    def zeros(cls, grid: TorusGrid, is_real: bool = True) -> SpectralScalar:
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), is_real, check=False)

    @classmethod
    def from_physical(cls, grid: TorusGrid, values: np.ndarray) -> SpectralScalar:
        return transform(values, grid)

    def to_physical(self) -> np.ndarray:
        return transform(self)

    def hermitian_defect(self) -> float:
        """Relative violation of Hermitian symmetry."""
        scale = np.max(np.abs(self.coeffs))
        if scale == 0:
            return 0.0
        diff = self.coeffs - _hermitian_partner(self.coeffs, self.grid.n)
        return float(np.max(np.abs(diff)) / scale)

    def norm(self) -> float:
        """L^2 norm in the normalized torus measure (Parseval)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[self.grid.zero_mode])

    def _wrap(self, coeffs: np.ndarray, is_real: bool) -> SpectralScalar:
        return SpectralScalar(self.grid, coeffs, is_real, check=False)

    def _coerce(self, other: SpectralScalar) -> np.ndarray:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return other.coeffs

    def __add__(self, other: SpectralScalar) -> SpectralScalar:
        return self._wrap(self.coeffs + self._coerce(other), self.is_real and other.is_real)

    def __sub__(self, other: SpectralScalar) -> SpectralScalar:
        return self._wrap(self.coeffs - self._coerce(other), self.is_real and other.is_real)

    def __neg__(self) -> SpectralScalar:
        return self._wrap(-self.coeffs, self.is_real)

    def __mul__(self, scalar: complex) -> SpectralScalar:
        if isinstance(scalar, SpectralScalar):
            raise TypeError("use pointwise products through point space")
        real = self.is_real and np.isrealobj(scalar)
        return self._wrap(self.coeffs * scalar, real)

    __rmul__ = __mul__

    def conj(self) -> SpectralScalar:
        return self._wrap(_hermitian_partner(self.coeffs, self.grid.n), self.is_real)


def transform(field, grid: TorusGrid | None = None, direction: str | None = None):
    """Forward or inverse transform.

    ``transform(values, grid)`` maps a point lattice to a :class:`SpectralScalar`;
    ``transform(spectral)`` maps back to point values (real array when
    ``is_real``).  ``direction`` may be given explicitly as ``"forward"`` or
    ``"inverse"``.
    """
    if direction is None:
        direction = "inverse" if isinstance(field, SpectralScalar) else "forward"
    if direction == "forward":
        if grid is None:
            raise ValueError("forward transform needs a grid")
        values = np.asarray(field)
        if values.shape != grid.shape:
            raise ValueError(f"lattice shape {values.shape} does not match grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite lattice value")
        is_real = not np.iscomplexobj(values)
        return SpectralScalar(grid, grid.fft(values), is_real, check=False)
    if direction == "inverse":
        if not isinstance(field, SpectralScalar):
            raise TypeError("inverse transform expects a SpectralScalar")
        values = field.grid.ifft(field.coeffs)
        return values.real.copy() if field.is_real else values
    raise ValueError(f"unknown direction {direction!r}")


class Kind(str, enum.Enum):
    LAMBDA = "Lambda"
    D = "D"
    DMINUS = "Dminus"
    DPLUS = "Dplus"
    LAMBDA_PLUS = "LambdaPlus"
    RIESZ = "Riesz"
    INVERSE_LAPLACIAN = "InverseLaplacian"


SPACETIME_KINDS = frozenset({Kind.DMINUS, Kind.DPLUS, Kind.LAMBDA_PLUS})


@dataclass(frozen=True)
class MultiplierSymbol:
    """A Fourier multiplier: kind, exponent and (for Riesz) component index."""

    kind: Kind
    alpha: float = 1.0
    component: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.RIESZ and self.component is None:
            raise ValueError("Riesz symbol needs a component index")

    @classmethod
    def bessel(cls, alpha: float) -> MultiplierSymbol:
        return cls(Kind.LAMBDA, alpha)

    @classmethod
    def fractional(cls, alpha: float) -> MultiplierSymbol:
        return cls(Kind.D, alpha)

    @classmethod
    def riesz(cls, k: int) -> MultiplierSymbol:
        return cls(Kind.RIESZ, 1.0, k)

    @classmethod
    def inverse_laplacian(cls) -> MultiplierSymbol:
        return cls(Kind.INVERSE_LAPLACIAN, -2.0)

    @property
    def is_spacetime(self) -> bool:
        return self.kind in SPACETIME_KINDS

    @property
    def kills_mean(self) -> bool:
        return self.kind in (Kind.RIESZ, Kind.INVERSE_LAPLACIAN) or (self.kind is Kind.D and self.alpha < 0)

    def symbol(self, grid: TorusGrid) -> np.ndarray:
        """Per-frequency values on ``grid`` (zero mode handled per convention)."""
        if self.is_spacetime:
            raise ValueError(f"{self.kind.value} is a space-time symbol; use estlab")
        if self.kind is Kind.LAMBDA:
            return grid.japanese**self.alpha
        if self.kind is Kind.D:
            if self.alpha >= 0:
                return grid.xi_abs**self.alpha
            out = np.zeros(grid.shape)
            nz = grid.xi2 > 0
            out[nz] = grid.xi_abs[nz] ** self.alpha
            return out
        if self.kind is Kind.RIESZ:
            k = self.component
            if not 0 <= k < grid.n:
                raise ValueError(f"Riesz component {k} out of range for n={grid.n}")
            inv = np.zeros(grid.shape)
            nz = grid.xi2 > 0
            inv[nz] = 1.0 / grid.xi_abs[nz]
            return RIESZ_SIGN * 1j * grid.xi[k] * inv
        if self.kind is Kind.INVERSE_LAPLACIAN:
            return -grid.inv_xi2
        raise AssertionError(self.kind)


def apply_multiplier(f: SpectralScalar, m: MultiplierSymbol) -> SpectralScalar:
    """Multiply ``f`` frequency-wise by the symbol of ``m``."""
    sym = m.symbol(f.grid)
    if m.kind is Kind.D and m.alpha < 0:
        if abs(f.mean) > 1e-10 * f.norm():
            warnings.warn("D^alpha with alpha<0 dropped a nonzero mean", MeanDroppedWarning, stacklevel=2)
    # i*xi_k/|xi| maps Hermitian fields to Hermitian fields; all other symbols are even and real
    return SpectralScalar(f.grid, f.coeffs * sym, f.is_real, check=False)


def derivative(f: SpectralScalar, k: int) -> SpectralScalar:
    """Spatial derivative d/dx_k (symbol i*xi_k)."""
    return SpectralScalar(f.grid, 1j * f.grid.xi[k] * f.coeffs, f.is_real, check=False)


def laplacian(f: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(f.grid, -f.grid.xi2 * f.coeffs, f.is_real, check=False)


def inv_laplacian(f: SpectralScalar) -> SpectralScalar:
    """Delta^{-1} on mean-free fields; the mean is annihilated."""
    return SpectralScalar(f.grid, -f.grid.inv_xi2 * f.coeffs, f.is_real, check=False)


def dealias(f: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(f.grid, np.where(f.grid.dealias_mask, f.coeffs, 0.0), f.is_real, check=False)
