"""Physical field aggregates: the evolved state, the Faraday tensor, Sobolev norms.

Index conventions (Minkowski metric diag(-1, 1, ..., 1)):

    ============  ==========================
    quantity      relation
    ============  ==========================
    A^0           -A_0
    A^j           A_j
    d^0           -d_t
    d^j           d_j
    A^mu d_mu     -A_0 d_t + A_j d_j
    A_mu A^mu     -A_0^2 + A_j A_j
    ============  ==========================

Every formula in the package uses this table.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import SpectralScalar, TorusGrid, derivative

__all__ = [
    "MKGState",
    "Faraday",
    "SobolevExponents",
    "faraday_from_potential",
    "sobolev_norm",
    "vector_sobolev_norm",
    "save_snapshot",
    "load_snapshot",
    "SNAPSHOT_MAGIC",
]

SNAPSHOT_MAGIC = b"MKGS"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True, eq=False)
class MKGState:
    """(phi, d_t phi, A_0..A_n, d_t A_0..d_t A_n) at time ``t``."""

    t: float
    phi: SpectralScalar
    phi_t: SpectralScalar
    a: tuple[SpectralScalar, ...]
    a_t: tuple[SpectralScalar, ...]
    m: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "a_t", tuple(self.a_t))
        grid = self.phi.grid
        n = grid.n
        if len(self.a) != n + 1 or len(self.a_t) != n + 1:
            raise ValueError(f"potential needs n+1 = {n + 1} components")
        for f in (self.phi_t, *self.a, *self.a_t):
            if f.grid != grid:
                raise ValueError("all state fields must share one grid")
        for f in (*self.a, *self.a_t):
            if not f.is_real:
                raise ValueError("potential components must be flagged real")
        if self.m < 0:
            raise ValueError("mass must be non-negative")

    @property
    def grid(self) -> TorusGrid:
        return self.phi.grid

    @property
    def n(self) -> int:
        return self.grid.n

    @classmethod
    def zeros(cls, grid: TorusGrid, m: float = 1.0, t: float = 0.0) -> MKGState:
        z = SpectralScalar.zeros(grid, is_real=True)
        zc = SpectralScalar.zeros(grid, is_real=False)
        return cls(t, zc, zc, (z,) * (grid.n + 1), (z,) * (grid.n + 1), m)

    def pack(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack (phi, A_0..A_n) and their time derivatives into two arrays."""
        y = np.stack([self.phi.coeffs, *(f.coeffs for f in self.a)])
        v = np.stack([self.phi_t.coeffs, *(f.coeffs for f in self.a_t)])
        return y, v

    @classmethod
    def from_packed(cls, grid: TorusGrid, y: np.ndarray, v: np.ndarray, t: float, m: float) -> MKGState:
        def wrap(c, real):
            return SpectralScalar(grid, c.copy(), real, check=False)

        n = grid.n
        return cls(
            t,
            wrap(y[0], False),
            wrap(v[0], False),
            tuple(wrap(y[1 + mu], True) for mu in range(n + 1)),
            tuple(wrap(v[1 + mu], True) for mu in range(n + 1)),
            m,
        )

    def is_finite(self) -> bool:
        y, v = self.pack()
        return bool(np.all(np.isfinite(y)) and np.all(np.isfinite(v)))


@dataclass(frozen=True, eq=False)
class Faraday:
    """Antisymmetric F_{mu nu}, stored for mu < nu only."""

    grid: TorusGrid
    f: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.grid.n
        for (mu, nu) in self.f:
            if not 0 <= mu < nu <= n:
                raise ValueError(f"Faraday stores mu < nu only, got ({mu}, {nu})")
        for mu, nu in self.pairs(n):
            if (mu, nu) not in self.f:
                self.f[(mu, nu)] = SpectralScalar.zeros(self.grid, is_real=True)

    @staticmethod
    def pairs(n: int, spatial_only: bool = False) -> list[tuple[int, int]]:
        lo = 1 if spatial_only else 0
        return [(mu, nu) for mu in range(lo, n + 1) for nu in range(mu + 1, n + 1)]

    def __getitem__(self, key: tuple[int, int]) -> SpectralScalar:
        mu, nu = key
        if mu == nu:
            return SpectralScalar.zeros(self.grid, is_real=True)
        if mu < nu:
            return self.f[(mu, nu)]
        return -self.f[(nu, mu)]

    def components(self, spatial_only: bool = False):
        for key in self.pairs(self.grid.n, spatial_only):
            yield key, self.f[key]

    def norm(self, spatial_only: bool = False) -> float:
        return float(np.sqrt(sum(c.norm() ** 2 for _, c in self.components(spatial_only))))

    def __sub__(self, other: Faraday) -> Faraday:
        return Faraday(self.grid, {k: self.f[k] - other.f[k] for k in self.f})

    def __add__(self, other: Faraday) -> Faraday:
        return Faraday(self.grid, {k: self.f[k] + other.f[k] for k in self.f})

    def scaled(self, c: float) -> Faraday:
        return Faraday(self.grid, {k: v * c for k, v in self.f.items()})

    def bianchi_residual(self) -> float:
        """max over l<j<k of ||d_l F_jk + d_j F_kl + d_k F_lj||."""
        n = self.grid.n
        worst = 0.0
        for l in range(1, n + 1):
            for j in range(l + 1, n + 1):
                for k in range(j + 1, n + 1):
                    r = (
                        derivative(self[j, k], l - 1)
                        + derivative(self[k, l], j - 1)
                        + derivative(self[l, j], k - 1)
                    )
                    worst = max(worst, r.norm())
        return worst


@dataclass(frozen=True)
class SobolevExponents:
    """Regularity exponents (s, r) and the small epsilon of b = 1/2 + epsilon."""

    s: float
    r: float
    epsilon: float = 0.05

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def violations(self, n: int) -> list[str]:
        """Theorem-1 hypotheses that fail for dimension ``n`` (empty if admissible)."""
        s, r = self.s, self.r
        checks = [
            ("n >= 4", n >= 4),
            (f"s > n/2 - 5/6 = {n / 2 - 5 / 6:g}", s > n / 2 - 5 / 6),
            (f"r > n/2 - 1 = {n / 2 - 1:g}", r > n / 2 - 1),
            ("s >= r", s >= r),
            ("r >= s - 1/2", r >= s - 0.5),
            (f"3s - 2r > (n-1)/2 = {(n - 1) / 2:g}", 3 * s - 2 * r > (n - 1) / 2),
            (f"2r - s > (n-3)/2 = {(n - 3) / 2:g}", 2 * r - s > (n - 3) / 2),
        ]
        return [name for name, ok in checks if not ok]

    def admissible(self, n: int) -> bool:
        return not self.violations(n)


def faraday_from_potential(state: MKGState) -> Faraday:
    """F_{0k} = d_t A_k - d_k A_0 and F_{jk} = d_j A_k - d_k A_j."""
    n = state.n
    f = {}
    for k in range(1, n + 1):
        f[(0, k)] = state.a_t[k] - derivative(state.a[0], k - 1)
    for j in range(1, n + 1):
        for k in range(j + 1, n + 1):
            f[(j, k)] = derivative(state.a[k], j - 1) - derivative(state.a[j], k - 1)
    return Faraday(state.grid, f)


def sobolev_norm(f: SpectralScalar, s: float) -> float:
    """(sum_xi <xi>^{2s} |coeffs(xi)|^2)^{1/2}."""
    w = f.grid.japanese ** (2.0 * s)
    return float(np.sqrt(np.sum(w * (f.coeffs.real**2 + f.coeffs.imag**2))))


def vector_sobolev_norm(fields, s: float) -> float:
    """l^2 combination of component norms."""
    return float(np.sqrt(sum(sobolev_norm(f, s) ** 2 for f in fields)))


def _frequency_order(N: int) -> np.ndarray:
    # ascending frequencies -N/2+1 .. N/2 in FFT index terms
    return np.roll(np.arange(N), -(N // 2 + 1))


def _to_frequency_order(c: np.ndarray) -> np.ndarray:
    idx = _frequency_order(c.shape[0])
    return c[np.ix_(*([idx] * c.ndim))]


def _from_frequency_order(c: np.ndarray) -> np.ndarray:
    idx = np.argsort(_frequency_order(c.shape[0]))
    return c[np.ix_(*([idx] * c.ndim))]


def save_snapshot(state: MKGState, target) -> None:
    """Write the binary MKGS snapshot to a path or binary stream.

    Layout (little endian): b"MKGS", u32 version=1, u32 n, u32 N, f64 m,
    f64 t, then phi, phi_t, a[0..n], a_t[0..n], each as interleaved (re, im)
    f64 pairs over the frequency lattice {-N/2+1..N/2}^n in row-major order.
    """
    grid = state.grid
    buf = io.BytesIO()
    buf.write(SNAPSHOT_MAGIC)
    buf.write(struct.pack("<IIIdd", SNAPSHOT_VERSION, grid.n, grid.N, float(state.m), float(state.t)))
    for f in (state.phi, state.phi_t, *state.a, *state.a_t):
        c = _to_frequency_order(f.coeffs)
        pairs = np.empty(c.size * 2, dtype="<f8")
        pairs[0::2] = c.real.ravel()
        pairs[1::2] = c.imag.ravel()
        buf.write(pairs.tobytes())
    data = buf.getvalue()
    if isinstance(target, (str, Path)):
        Path(target).write_bytes(data)
    else:
        target.write(data)


def load_snapshot(source, dealias_fraction: float = 1.0 / 3.0) -> MKGState:
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source.read()
    if data[:4] != SNAPSHOT_MAGIC:
        raise ValueError("not an MKGS snapshot (bad magic)")
    version, n, N, m, t = struct.unpack_from("<IIIdd", data, 4)
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    grid = TorusGrid(n, N, dealias_fraction)
    offset = 4 + struct.calcsize("<IIIdd")
    count = N**n
    nfields = 2 + 2 * (n + 1)
    expected = offset + nfields * count * 16
    if len(data) != expected:
        raise ValueError(f"snapshot size {len(data)} != expected {expected}")
    raw = np.frombuffer(data, dtype="<f8", offset=offset).reshape(nfields, count, 2)
    comps = [_from_frequency_order((r[:, 0] + 1j * r[:, 1]).reshape(grid.shape)) for r in raw]
    y = np.stack([comps[0], *comps[2 : 3 + n]])
    v = np.stack([comps[1], *comps[3 + n :]])
    return MKGState.from_packed(grid, y, v, t, m)
