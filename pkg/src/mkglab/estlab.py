"""Wave-Sobolev norms on space-time lattices and empirical probes of
bilinear estimates.

Time is sampled at t_m = 2 pi m / Nt on one period and transformed with the
same normalized convention as space, so for s = b = 0 the H^{s,b} norm is
the space-time L^2 norm with respect to the normalized measure.  The lattice
periodizes time; by default a sin^2(t/2) taper (cosine-squared, vanishing
with its derivative at both ends) is applied before the temporal transform.

Probes work on sparse free waves

    u(t, x) = sum_p a_p e^{i(sigma_p |xi_p| t + xi_p . x)},

so products are exact lattice convolutions (no spatial aliasing) and the cost
scales with the number of active modes rather than with N^n.
"""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import kernels
from .grid import TorusGrid

__all__ = [
    "SpaceTimeField",
    "FreeWave",
    "Ensemble",
    "ProbeConfig",
    "ProbeReport",
    "HomogeneousWarning",
    "WINDOWS",
    "hsb_norm",
    "random_wave",
    "draw_wave",
    "probe",
    "nullform_gain_probe",
    "admissibility",
    "verdict_for",
    "default_nt",
]

WINDOWS = ("none", "cos2")
ESTIMATES = ("prop36", "strichartz", "lv", "nullgain")
ENSEMBLES = ("random_free", "knapp", "single_mode")
GROWING_SLOPE = 0.2
BOUNDED_SLOPE = 0.1
DEGENERATE_RHS = 1e-14


class HomogeneousWarning(UserWarning):
    """Homogeneous norm requested for a field with xi = 0 content."""


def default_nt(N: int) -> int:
    """Temporal samples for spatial size N: enough to resolve |tau| up to
    the largest product frequency without wrap-around of the main lobes."""
    return 4 * N + 8


def _window(kind: str, Nt: int) -> np.ndarray:
    if kind not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got {kind!r}")
    t = 2.0 * np.pi * np.arange(Nt) / Nt
    if kind == "none":
        return np.ones(Nt)
    return np.sin(0.5 * t) ** 2


def _tau(Nt: int) -> np.ndarray:
    k = np.fft.fftfreq(Nt, d=1.0 / Nt)
    if Nt % 2 == 0:
        k[Nt // 2] = Nt // 2
    return k


def _spatial_weight(xi_abs: np.ndarray, s: float, homogeneous: bool) -> np.ndarray:
    if not homogeneous:
        return (1.0 + xi_abs**2) ** s
    out = np.zeros_like(xi_abs)
    nz = xi_abs > 0
    out[nz] = xi_abs[nz] ** (2.0 * s)
    return out


# ---------------------------------------------------------------------------
# Dense space-time fields


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Coefficients over (tau, xi): shape (Nt, N, ..., N), FFT index order."""

    grid: TorusGrid
    Nt: int
    coeffs: np.ndarray
    window: str = "cos2"

    def __post_init__(self) -> None:
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")
        if self.coeffs.shape != (self.Nt,) + self.grid.shape:
            raise ValueError(f"coeffs shape {self.coeffs.shape} != {(self.Nt,) + self.grid.shape}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("space-time coefficients must be finite")

    @classmethod
    def from_samples(cls, grid: TorusGrid, values: np.ndarray, window: str = "cos2") -> SpaceTimeField:
        """Taper and transform point samples u(t_m, x) of shape (Nt, N, ..., N)."""
        values = np.asarray(values, dtype=np.complex128)
        Nt = values.shape[0]
        w = _window(window, Nt).reshape((Nt,) + (1,) * grid.n)
        c = sfft.fftn(values * w, axes=(0, *grid.axes), norm="forward")
        return cls(grid, Nt, c, window)

    def samples(self) -> np.ndarray:
        return sfft.ifftn(self.coeffs, axes=(0, *self.grid.axes), norm="forward")

    def scaled(self, c: complex) -> SpaceTimeField:
        return SpaceTimeField(self.grid, self.Nt, self.coeffs * c, self.window)

    @property
    def tau(self) -> np.ndarray:
        return _tau(self.Nt)


def hsb_norm(f, s: float, b: float, homogeneous: bool = False, **kw) -> float:
    """(sum <xi>^{2s} <|tau| - |xi|>^{2b} |coeffs|^2)^{1/2}.

    ``homogeneous=True`` uses |xi|^{2s} and drops the xi = 0 plane (with a
    :class:`HomogeneousWarning` if that plane carries content).  Accepts a
    :class:`SpaceTimeField` or a :class:`FreeWave` (then ``Nt`` and
    ``window`` keywords apply).
    """
    if isinstance(f, FreeWave):
        return f.hsb(s, b, homogeneous=homogeneous, **kw)
    grid = f.grid
    c = np.ascontiguousarray(f.coeffs.reshape(f.Nt, grid.size))
    xi_abs = np.ascontiguousarray(grid.xi_abs.reshape(-1))
    if homogeneous:
        zero = np.abs(c[:, 0]) ** 2
        if zero.sum() > 1e-24 * max(1.0, float(np.sum(np.abs(c) ** 2))):
            warnings.warn("homogeneous H^{s,b} norm ignores nonzero xi = 0 content", HomogeneousWarning, stacklevel=2)
    w2 = np.ascontiguousarray(_spatial_weight(xi_abs, s, homogeneous))
    return math.sqrt(kernels.hsb_sumsq(c, np.abs(f.tau), xi_abs, w2, float(b)))


# ---------------------------------------------------------------------------
# Sparse free waves


@dataclass(frozen=True, eq=False)
class FreeWave:
    """Finite sum of free waves; ``modes`` are distinct integer vectors."""

    modes: np.ndarray
    amps: np.ndarray
    signs: np.ndarray

    def __post_init__(self) -> None:
        modes = np.asarray(self.modes, dtype=np.int64)
        if modes.ndim != 2:
            raise ValueError("modes must have shape (K, n)")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "amps", np.asarray(self.amps, dtype=np.complex128))
        object.__setattr__(self, "signs", np.asarray(self.signs, dtype=np.float64))
        if len({tuple(m) for m in modes}) != len(modes):
            raise ValueError("modes must be distinct")

    @property
    def n(self) -> int:
        return self.modes.shape[1]

    @property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(np.sum(self.modes.astype(float) ** 2, axis=1))

    def scaled(self, c: complex) -> FreeWave:
        return FreeWave(self.modes, self.amps * c, self.signs)

    def samples(self, Nt: int, window: str = "cos2", deriv: int | None = None) -> np.ndarray:
        """(Nt, K) time samples per mode; ``deriv`` = 0 for d_t, k >= 1 for
        d_k (exact derivative of the unwindowed wave, then windowed)."""
        t = 2.0 * np.pi * np.arange(Nt) / Nt
        phase = np.exp(1j * np.outer(t, self.signs * self.xi_abs))
        amps = self.amps
        if deriv == 0:
            amps = amps * 1j * self.signs * self.xi_abs
        elif deriv is not None:
            amps = amps * 1j * self.modes[:, deriv - 1]
        return np.ascontiguousarray(_window(window, Nt)[:, None] * phase * amps[None, :])

    def coefficients(self, Nt: int, window: str = "cos2") -> np.ndarray:
        """(Nt, K) temporal coefficients per mode."""
        return np.ascontiguousarray(sfft.fft(self.samples(Nt, window), axis=0, norm="forward"))

    def hsb(self, s: float, b: float, *, Nt: int, window: str = "cos2", homogeneous: bool = False) -> float:
        c = self.coefficients(Nt, window)
        xi = self.xi_abs
        if homogeneous and np.any(xi == 0):
            warnings.warn("homogeneous H^{s,b} norm ignores nonzero xi = 0 content", HomogeneousWarning, stacklevel=2)
        w2 = np.ascontiguousarray(_spatial_weight(xi, s, homogeneous))
        return math.sqrt(kernels.hsb_sumsq(c, np.abs(_tau(Nt)), np.ascontiguousarray(xi), w2, float(b)))

    def to_field(self, grid: TorusGrid, Nt: int, window: str = "cos2") -> SpaceTimeField:
        """Dense space-time field; every mode must fit the grid."""
        if self.n != grid.n:
            raise ValueError("dimension mismatch")
        if np.any(self.modes > grid.N // 2) or np.any(self.modes <= -grid.N // 2):
            raise ValueError("wave has modes outside the grid band")
        coeffs = np.zeros((Nt,) + grid.shape, dtype=np.complex128)
        idx = tuple(np.mod(self.modes[:, k], grid.N) for k in range(grid.n))
        tc = self.coefficients(Nt, window)
        for p in range(len(self.modes)):
            coeffs[(slice(None),) + tuple(i[p] for i in idx)] += tc[:, p]
        return SpaceTimeField(grid, Nt, coeffs, window)


def _pair_index(mu: np.ndarray, mv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sums xi_i + eta_j and the (Ku, Kv) map into them."""
    sums = mu[:, None, :] + mv[None, :, :]
    flat = sums.reshape(-1, mu.shape[1])
    lo = flat.min(axis=0)
    span = flat.max(axis=0) - lo + 1
    key = np.zeros(len(flat), dtype=np.int64)
    for k in range(mu.shape[1]):
        key = key * span[k] + (flat[:, k] - lo[k])
    uniq, inverse = np.unique(key, return_inverse=True)
    out = np.empty((len(uniq), mu.shape[1]), dtype=np.int64)
    rem = uniq.copy()
    for k in reversed(range(mu.shape[1])):
        out[:, k] = rem % span[k] + lo[k]
        rem //= span[k]
    return out, np.ascontiguousarray(inverse.reshape(len(mu), len(mv)).astype(np.int64))


class _Bilinear:
    """Per-time-sample spatial products of two sparse waves.

    Output frequencies are the distinct sums xi + eta.  Two exact paths:
    the pair-product kernel (cost ~ Ku Kv per sample) and a zero-padded FFT
    convolution over the bounding boxes (cost ~ box volume * log), chosen
    by estimated cost.
    """

    BOX_LIMIT = 2**21  # cells per time sample

    def __init__(self, mu: np.ndarray, mv: np.ndarray, path: str | None = None):
        self.mu, self.mv = mu, mv
        lo_u, lo_v = mu.min(axis=0), mv.min(axis=0)
        span = (mu.max(axis=0) - lo_u) + (mv.max(axis=0) - lo_v) + 1
        self.shape = tuple(sfft.next_fast_len(int(L)) for L in span)
        vol = float(np.prod(self.shape))
        pair_cost = float(len(mu)) * len(mv)
        box_cost = 3.0 * vol * max(1.0, math.log2(vol)) + 2.0 * (len(mu) + len(mv))
        self.path = path or ("box" if box_cost < pair_cost and vol <= self.BOX_LIMIT else "pairs")
        if self.path == "pairs":
            self.out_modes, self.index = _pair_index(mu, mv)
        else:
            self.off_u = mu - lo_u
            self.off_v = mv - lo_v
            self.out_modes, self.flat = _pair_index_box(mu, mv, lo_u + lo_v, self.shape)

    def __call__(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        if self.path == "pairs":
            return kernels.pair_product(
                np.ascontiguousarray(U, dtype=np.complex128),
                np.ascontiguousarray(V, dtype=np.complex128),
                self.index,
                len(self.out_modes),
            )
        nt = U.shape[0]
        n = self.mu.shape[1]
        axes = tuple(range(1, n + 1))
        bu = np.zeros((nt,) + self.shape, dtype=np.complex128)
        bv = np.zeros((nt,) + self.shape, dtype=np.complex128)
        bu[(slice(None),) + tuple(self.off_u.T)] = U
        bv[(slice(None),) + tuple(self.off_v.T)] = V
        prod = sfft.ifftn(sfft.fftn(bu, axes=axes) * sfft.fftn(bv, axes=axes), axes=axes)
        return np.ascontiguousarray(prod.reshape(nt, -1)[:, self.flat])


def _pair_index_box(mu, mv, lo, shape):
    # support of the sum set from a convolution of indicators (exact after rounding)
    n = mu.shape[1]
    iu = np.zeros(shape)
    iv = np.zeros(shape)
    iu[tuple((mu - mu.min(axis=0)).T)] = 1.0
    iv[tuple((mv - mv.min(axis=0)).T)] = 1.0
    cnt = sfft.irfftn(sfft.rfftn(iu) * sfft.rfftn(iv), s=shape)
    rel = np.argwhere(cnt > 0.5)
    out_modes = rel + lo
    order = np.lexsort(out_modes.T[::-1])
    out_modes = np.ascontiguousarray(out_modes[order])
    flat = np.ravel_multi_index(tuple(rel[order].T), shape)
    return out_modes, flat


# ---------------------------------------------------------------------------
# Ensembles


@dataclass(frozen=True)
class Ensemble:
    """Test-wave family.

    random_free: dyadic shells 2^j <= |xi| < 2^{j+1} (2^{j+1} <= N/2) with
        ``modes_per_shell`` random modes, complex Gaussian amplitudes scaled
        by 2^{-j(s+decay)} and random propagation signs.  With decay > 0
        the H^s norm converges as shells are added, so ratios settle in N.
    knapp: all lattice modes with lambda <= xi.omega <= 2 lambda and
        transverse distance <= thickness * lambda^thickness_power,
        lambda = 2^j <= N/4, coherent positive amplitudes and sign +1.
        thickness_power = 1/2 is the classical slab; 1 gives a coherent cap
        (focusing packet).  thickness = 0 gives collinear (parallel) waves.
    single_mode: one wave at ``mode`` (default e_1) with sign +1.
    """

    kind: str = "random_free"
    direction: tuple | None = None
    thickness: float = 1.0
    thickness_power: float = 0.5
    modes_per_shell: int = 8
    decay: float = 1.0
    mode: tuple | None = None

    def __post_init__(self) -> None:
        if self.kind not in ENSEMBLES:
            raise ValueError(f"ensemble.kind must be one of {ENSEMBLES}, got {self.kind!r}")
        if self.thickness < 0:
            raise ValueError("ensemble.thickness must be non-negative")
        if self.modes_per_shell < 1:
            raise ValueError("ensemble.modes_per_shell must be positive")

    def scales(self, N: int) -> list[int]:
        """Knapp scales lambda available at size N."""
        out, lam = [], 1
        while 2 * lam <= N // 2:
            out.append(lam)
            lam *= 2
        return out


def _shell_modes(rng: np.random.Generator, n: int, j: int, count: int) -> np.ndarray:
    lo, hi = 2**j, 2 ** (j + 1)
    grid = np.stack(np.meshgrid(*([np.arange(-hi, hi + 1)] * n), indexing="ij"), axis=-1).reshape(-1, n)
    r = np.sqrt(np.sum(grid.astype(float) ** 2, axis=1))
    cand = grid[(r >= lo) & (r < hi)]
    pick = rng.choice(len(cand), size=min(count, len(cand)), replace=False)
    return cand[np.sort(pick)]


def _knapp_modes(n: int, N: int, lam: int, width: float, direction) -> np.ndarray:
    omega = np.zeros(n)
    if direction is None:
        omega[0] = 1.0
    else:
        omega = np.asarray(direction, dtype=float)
        if omega.shape != (n,) or not np.linalg.norm(omega) > 0:
            raise ValueError("ensemble.direction must be a nonzero n-vector")
        omega = omega / np.linalg.norm(omega)
    half = N // 2
    reach = int(math.ceil(math.hypot(2 * lam, width))) + 1
    ax = np.arange(max(-half + 1, -reach), min(half, reach) + 1)
    pts = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    along = pts @ omega
    perp = np.sqrt(np.maximum(np.sum(pts.astype(float) ** 2, axis=1) - along**2, 0.0))
    keep = (along >= lam - 1e-9) & (along <= 2 * lam + 1e-9) & (perp <= width + 1e-9)
    return pts[keep]


def draw_wave(ens: Ensemble, n: int, N: int, s: float, *, seed: int = 0, trial: int = 0, salt: int = 0) -> FreeWave:
    """One ensemble member.  Streams are keyed by (seed, trial, shell or
    scale, salt) so results do not depend on scheduling, and low shells /
    scales are shared across resolutions."""
    if ens.kind == "single_mode":
        m = np.zeros((1, n), dtype=np.int64)
        if ens.mode is None:
            m[0, 0] = 1
        else:
            m[0] = np.asarray(ens.mode, dtype=np.int64)
        return FreeWave(m, np.ones(1), np.ones(1))
    if ens.kind == "knapp":
        scales = ens.scales(N)
        if not scales:
            raise ValueError(f"N={N} too small for a knapp wave")
        j = trial % len(scales)
        rep = trial // len(scales)
        lam = scales[j]
        modes = _knapp_modes(n, N, lam, ens.thickness * lam**ens.thickness_power, ens.direction)
        rng = np.random.default_rng([seed, j, rep, salt])
        amps = rng.uniform(0.5, 1.0, size=len(modes))
        return FreeWave(modes, amps, np.ones(len(modes)))
    modes, amps, signs = [], [], []
    j = 0
    while 2 ** (j + 1) <= N // 2:
        rng = np.random.default_rng([seed, trial, j, salt])
        m = _shell_modes(rng, n, j, ens.modes_per_shell)
        a = (rng.standard_normal(len(m)) + 1j * rng.standard_normal(len(m))) / math.sqrt(2.0)
        modes.append(m)
        amps.append(a * 2.0 ** (-j * (s + ens.decay)))
        signs.append(rng.choice([-1.0, 1.0], size=len(m)))
        j += 1
    if not modes:
        raise ValueError(f"N={N} too small for a random_free wave")
    return FreeWave(np.concatenate(modes), np.concatenate(amps), np.concatenate(signs))


def random_wave(
    ens: Ensemble,
    grid: TorusGrid,
    target: tuple[float, float],
    *,
    Nt: int | None = None,
    window: str = "cos2",
    seed: int = 0,
    trial: int = 0,
) -> SpaceTimeField:
    """Dense ensemble member normalized to hsb_norm(u, s, b) = 1."""
    s, b = target
    Nt = Nt or default_nt(grid.N)
    f = draw_wave(ens, grid.n, grid.N, s, seed=seed, trial=trial).to_field(grid, Nt, window)
    nrm = hsb_norm(f, s, b)
    if nrm == 0:
        raise ValueError("degenerate wave")
    return f.scaled(1.0 / nrm)


# ---------------------------------------------------------------------------
# Admissibility


def admissibility(estimate: str, n: int, params: dict) -> list[str]:
    """Violated hypotheses of the cited estimate (empty if admissible)."""
    p = params
    bad = []

    def need(name, ok):
        if not ok:
            bad.append(name)

    if estimate == "prop36":
        s0, s1, s2 = p["s0"], p["s1"], p["s2"]
        tot = s0 + s1 + s2
        need("n >= 4", n >= 4)
        need(f"s0+s1+s2 > (n-1)/2 = {(n - 1) / 2:g}", tot > (n - 1) / 2)
        need(f"(s0+s1+s2)+s1+s2 > n/2 = {n / 2:g}", tot + s1 + s2 > n / 2)
        need("s0+s1 >= 0", s0 + s1 >= 0)
        need("s0+s2 >= 0", s0 + s2 >= 0)
        need("s1+s2 >= 0", s1 + s2 >= 0)
    elif estimate == "strichartz":
        q, r = p["q"], p["r"]
        need("n >= 2", n >= 2)
        need("2 <= q <= inf", 2 <= q <= math.inf)
        need("2 <= r < inf", 2 <= r < math.inf)
        need("2/q <= (n-1)(1/2 - 1/r)", 2.0 / q <= (n - 1) * (0.5 - 1.0 / r) + 1e-15)
    elif estimate == "lv":
        q, a1, a2, b0 = p["q"], p["alpha1"], p["alpha2"], p.get("beta0", 0.0)
        need("n >= 4", n >= 4)
        need("1 < q <= 2", 1 < q <= 2)
        need("1/q = n/2 - alpha1 - alpha2 + beta0", abs(1.0 / q - (n / 2 - a1 - a2 + b0)) <= 1e-12)
        need(f"beta0 > 2/q - (n+1)/2", b0 > 2.0 / q - (n + 1) / 2)
        need("alpha1, alpha2 < n/2 + 1/2 - 2/q", max(a1, a2) < n / 2 + 0.5 - 2.0 / q)
        need("alpha1, alpha2 >= 0", min(a1, a2) >= 0)
    elif estimate == "nullgain":
        eps = p.get("eps", 0.05)
        need("0 <= eps <= 1/4", 0 <= eps <= 0.25)
    else:
        raise ValueError(f"unknown estimate {estimate!r}; expected one of {ESTIMATES}")
    return bad


# ---------------------------------------------------------------------------
# Probes


@dataclass
class ProbeConfig:
    """``estimate`` in {prop36, strichartz, lv, nullgain}; ``params`` holds
    its exponents (s0, s1, s2 | q, r | q, alpha1, alpha2, beta0 | eps, form);
    ``resolutions`` lists (N, Nt) pairs, Nt = None for the default."""

    estimate: str
    params: dict
    ensemble: Ensemble = field(default_factory=Ensemble)
    trials: int = 50
    resolutions: list = field(default_factory=lambda: [(8, None), (16, None), (32, None)])
    n: int = 4
    epsilon: float = 0.05
    window: str = "cos2"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.estimate not in ESTIMATES:
            raise ValueError(f"estimate must be one of {ESTIMATES}, got {self.estimate!r}")
        if isinstance(self.ensemble, dict):
            self.ensemble = Ensemble(**self.ensemble)
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")
        if not 1 <= self.n <= 4:
            raise ValueError("n must lie in 1..4")
        res = []
        for r in self.resolutions:
            N, Nt = (r, None) if isinstance(r, (int, np.integer)) else tuple(r)
            if N < 4 or N & (N - 1):
                raise ValueError(f"resolution N={N} must be a power of two >= 4")
            res.append((int(N), int(Nt) if Nt else default_nt(int(N))))
        self.resolutions = res
        admissibility(self.estimate, self.n, self.params)  # raises on missing keys

    @property
    def b(self) -> float:
        return 0.5 + self.epsilon

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ensemble"] = asdict(self.ensemble)
        return d


@dataclass
class ProbeReport:
    config: dict
    violations: list
    resolutions: list
    ratios: dict
    skipped: dict
    slope: float
    verdict: str
    runtime: float = 0.0

    @property
    def admissible(self) -> bool:
        return not self.violations

    def summary(self) -> list[dict]:
        out = []
        for N, Nt in self.resolutions:
            r = np.asarray(self.ratios[str(N)])
            out.append(
                {
                    "N": N,
                    "Nt": Nt,
                    "trials": len(r),
                    "skipped": self.skipped[str(N)],
                    "max": float(r.max()) if len(r) else math.nan,
                    "median": float(np.median(r)) if len(r) else math.nan,
                    "mean": float(r.mean()) if len(r) else math.nan,
                }
            )
        return out

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "admissible": self.admissible,
            "violations": self.violations,
            "summary": self.summary(),
            "slope": self.slope,
            "verdict": self.verdict,
            "ratios": self.ratios,
            "runtime_s": self.runtime,
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True))

    def to_csv(self, path) -> None:
        cols = ["N", "Nt", "trials", "skipped", "max", "median", "mean"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols + ["slope", "verdict"])
            for row in self.summary():
                vals = [row[c] if isinstance(row[c], int) else f"{row[c]:.17g}" for c in cols]
                w.writerow(vals + [f"{self.slope:.17g}", self.verdict])


def verdict_for(Ns, maxima) -> tuple[float, str]:
    """Log-log least-squares slope of max ratio against N and its verdict."""
    Ns = np.asarray(Ns, dtype=float)
    m = np.asarray(maxima, dtype=float)
    ok = np.isfinite(m) & (m > 0)
    if ok.sum() < 2:
        return math.nan, "inconclusive"
    slope = float(np.polyfit(np.log(Ns[ok]), np.log(m[ok]), 1)[0])
    if ok.sum() >= 3 and slope > GROWING_SLOPE:
        return slope, "growing"
    if abs(slope) <= BOUNDED_SLOPE:
        return slope, "bounded"
    return slope, "inconclusive"


def _lhs_product_norm(u: FreeWave, v: FreeWave, Nt: int, window: str, s0: float) -> float:
    """||u v||_{H^{-s0, 0}} via exact pair products per time sample."""
    bil = _Bilinear(u.modes, v.modes)
    out_modes = bil.out_modes
    G = bil(u.samples(Nt, window), v.samples(Nt, window))
    xi = np.sqrt(np.sum(out_modes.astype(float) ** 2, axis=1))
    w = (1.0 + xi**2) ** (-s0)
    return math.sqrt(float(np.sum(w[None, :] * (G.real**2 + G.imag**2))) / Nt)


def _strichartz_lhs(u: FreeWave, N: int, Nt: int, window: str, q: float, r: float) -> float:
    n = u.n
    if N**n * 8 > 2**27:
        raise ValueError("strichartz probe needs N^n physical points; use n <= 3 or smaller N")
    U = u.samples(Nt, window)
    idx = tuple(np.mod(u.modes[:, k], N) for k in range(n))
    norms = np.empty(Nt)
    for m in range(Nt):
        c = np.zeros((N,) * n, dtype=np.complex128)
        np.add.at(c, idx, U[m])
        vals = sfft.ifftn(c, norm="forward")
        norms[m] = np.mean(np.abs(vals) ** r) ** (1.0 / r)
    if math.isinf(q):
        return float(norms.max())
    return float(np.mean(norms**q) ** (1.0 / q))


def _lv_lhs(u: FreeWave, v: FreeWave, Nt: int, window: str, q: float, beta0: float) -> float:
    bil = _Bilinear(u.modes, v.modes)
    out_modes = bil.out_modes
    G = bil(u.samples(Nt, window), v.samples(Nt, window))
    xi = np.sqrt(np.sum(out_modes.astype(float) ** 2, axis=1))
    w = _spatial_weight(xi, beta0, True)
    l2 = np.sqrt(np.sum(w[None, :] * (G.real**2 + G.imag**2), axis=1))
    return float(np.mean(l2**q) ** (1.0 / q))


def _trial_ratio(cfg: ProbeConfig, N: int, Nt: int, trial: int) -> tuple[float, float]:
    p, ens, n, b, win = cfg.params, cfg.ensemble, cfg.n, cfg.b, cfg.window
    est = cfg.estimate
    if est == "prop36":
        u = draw_wave(ens, n, N, p["s1"], seed=cfg.seed, trial=trial, salt=0)
        v = draw_wave(ens, n, N, p["s2"], seed=cfg.seed, trial=trial, salt=1)
        lhs = _lhs_product_norm(u, v, Nt, win, p["s0"])
        rhs = u.hsb(p["s1"], b, Nt=Nt, window=win) * v.hsb(p["s2"], b, Nt=Nt, window=win)
    elif est == "strichartz":
        q, r = p["q"], p["r"]
        sig = n / 2 - n / r - 1.0 / q
        u = draw_wave(ens, n, N, sig, seed=cfg.seed, trial=trial, salt=0)
        lhs = _strichartz_lhs(u, N, Nt, win, q, r)
        rhs = u.hsb(sig, b, Nt=Nt, window=win)
    elif est == "lv":
        a1, a2 = p["alpha1"], p["alpha2"]
        u = draw_wave(ens, n, N, a1, seed=cfg.seed, trial=trial, salt=0)
        v = draw_wave(ens, n, N, a2, seed=cfg.seed, trial=trial, salt=1)
        lhs = _lv_lhs(u, v, Nt, win, p["q"], p.get("beta0", 0.0))
        rhs = u.hsb(a1, b, Nt=Nt, window=win, homogeneous=True) * v.hsb(a2, b, Nt=Nt, window=win, homogeneous=True)
    else:
        u = draw_wave(ens, n, N, 0.0, seed=cfg.seed, trial=trial, salt=0)
        v = draw_wave(ens, n, N, 0.0, seed=cfg.seed, trial=trial, salt=1)
        lhs, rhs = _nullgain_sides(u, v, Nt, win, p.get("eps", 0.05), tuple(p.get("form", (0, 1))))
    return lhs, rhs


def _nullgain_sides(u: FreeWave, v: FreeWave, Nt: int, window: str, eps: float, form: tuple) -> tuple[float, float]:
    """||Q(u, v)||_{L^2} and the L^2 norm of the three-term majorant.

    Q uses the exact derivatives of the free waves (windowed by w^2 overall).
    The majorant is built from |u^|, |v^| of the windowed waves with
    D_+ = (|tau| + |xi|), D_- = ||tau| - |xi||, a = 1/2 - 2 eps, c = 1/2 + 2 eps.
    """
    alpha, beta = form
    bil = _Bilinear(u.modes, v.modes)
    out_modes = bil.out_modes
    w = _window(window, Nt)[:, None]
    ua, ub = u.samples(Nt, "none", alpha) * w, u.samples(Nt, "none", beta) * w
    va, vb = v.samples(Nt, "none", alpha), v.samples(Nt, "none", beta)
    va, vb = va * w, vb * w
    Q = bil(ua, vb) - bil(ub, va)
    lhs = math.sqrt(float(np.sum(Q.real**2 + Q.imag**2)) / Nt)

    a, c = 0.5 - 2.0 * eps, 0.5 + 2.0 * eps
    tau = np.abs(_tau(Nt))[:, None]

    def pieces(f: FreeWave):
        C = np.abs(f.coefficients(Nt, window))
        xi = f.xi_abs[None, :]
        plus = (tau + xi) ** c * C
        return plus, plus * np.abs(tau - xi) ** a

    def conv(P, R):
        # positive space-time convolution via time samples
        Ps = sfft.ifft(P, axis=0, norm="forward")
        Rs = sfft.ifft(R, axis=0, norm="forward")
        return sfft.fft(bil(Ps, Rs), axis=0, norm="forward").real

    pu, mu = pieces(u)
    pv, mv = pieces(v)
    xo = np.sqrt(np.sum(out_modes.astype(float) ** 2, axis=1))[None, :]
    outer_plus = (tau + xo) ** a
    total = outer_plus * np.abs(tau - xo) ** a * conv(pu, pv) + outer_plus * (conv(mu, pv) + conv(pu, mv))
    rhs = math.sqrt(float(np.sum(total**2)))
    return lhs, rhs


def probe(config: ProbeConfig) -> ProbeReport:
    """Run every trial at every resolution and fit the growth of the max ratio."""
    t0 = time.perf_counter()
    violations = admissibility(config.estimate, config.n, config.params)
    ratios, skipped = {}, {}
    for N, Nt in config.resolutions:
        vals, skip = [], 0
        for trial in range(config.trials):
            lhs, rhs = _trial_ratio(config, N, Nt, trial)
            if not rhs >= DEGENERATE_RHS:
                skip += 1
                continue
            vals.append(lhs / rhs)
        ratios[str(N)] = vals
        skipped[str(N)] = skip
    maxima = [max(ratios[str(N)]) if ratios[str(N)] else math.nan for N, _ in config.resolutions]
    slope, verdict = verdict_for([N for N, _ in config.resolutions], maxima)
    return ProbeReport(
        config.as_dict(),
        violations,
        list(config.resolutions),
        ratios,
        skipped,
        slope,
        verdict,
        time.perf_counter() - t0,
    )


def nullform_gain_probe(
    eps: float = 0.05,
    ensemble: Ensemble | None = None,
    resolutions=((8, None), (16, None), (32, None)),
    *,
    n: int = 4,
    trials: int = 50,
    form: tuple = (0, 1),
    window: str = "cos2",
    seed: int = 0,
) -> ProbeReport:
    """Ratio ||Q(u,v)|| / ||(Q1) majorant|| across resolutions."""
    cfg = ProbeConfig(
        "nullgain",
        {"eps": eps, "form": list(form)},
        ensemble or Ensemble(),
        trials,
        list(resolutions),
        n,
        eps,
        window,
        seed,
    )
    return probe(cfg)
