"""Right-hand sides and time integration of the Lorenz-gauge system.

With box = -d_t^2 + Delta the evolved equations are

    box A_mu = N_mu = -j_mu,          box phi = M~(A, phi),

so each channel f of the packed state obeys f_tt = -|xi|^2 f + G with
G = j for the potentials and G = -M~ for phi.  The zero mode of the A_0
source is removed at every evaluation (uniform neutralizing background; see
:mod:`mkglab.initdata`).

Two integrators share the exact per-mode wave propagator

    f(t+h) = cos(|xi|h) f + sin(|xi|h)/|xi| f_t.

``RK4`` is classical Runge-Kutta in integrating-factor (Lawson) form.
``GAUTSCHI`` is a symmetric kick-drift-kick trigonometric method whose
half-kicks carry the filter sinc^2(|xi|h/2); since G depends on velocities
(phi_t, d_t A_0 enter M~) each half-kick is solved with a Heun stage.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import kernels
from .fields import Faraday, MKGState, faraday_from_potential, save_snapshot
from .grid import SpectralScalar, TorusGrid, dealias, derivative
from .nullforms import from_point, helmholtz_split, to_point

__all__ = [
    "Scheme",
    "SchemeSpec",
    "BlowUpError",
    "current",
    "rhs_N",
    "rhs_M",
    "rhs_Mtilde",
    "faraday_sources",
    "step",
    "evolve",
    "Evolution",
    "ObserverContext",
    "RightHandSide",
    "write_series_csv",
    "write_series_json",
]

BLOWUP_NORM = 1e100


class Scheme(str, enum.Enum):
    GAUTSCHI = "gautschi"
    RK4 = "rk4"


@dataclass(frozen=True)
class SchemeSpec:
    kind: Scheme = Scheme.RK4
    dt: float = 1e-3
    dealias: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Scheme(self.kind))
        if not (math.isfinite(self.dt) and self.dt != 0.0):
            raise ValueError(f"scheme.dt must be finite and nonzero, got {self.dt!r}")

    def with_dt(self, dt: float) -> SchemeSpec:
        return SchemeSpec(self.kind, dt, self.dealias)


class BlowUpError(RuntimeError):
    """Non-finite or runaway fields; carries the partial series."""

    def __init__(self, t: float, norm: float, series=None, state: MKGState | None = None):
        super().__init__(f"blow-up at t={t:.6g} (state norm {norm:.3e})")
        self.t = t
        self.norm = norm
        self.series = series if series is not None else []
        self.state = state


# ---------------------------------------------------------------------------
# Field-level operations (readable reference path)


def current(state: MKGState) -> tuple[SpectralScalar, ...]:
    """j_mu = Im(phi conj(d_mu phi)) + |phi|^2 A_mu, dealiased."""
    grid = state.grid
    phi = to_point(state.phi)
    mod2 = np.abs(phi) ** 2
    dphi = [state.phi_t] + [derivative(state.phi, k) for k in range(state.n)]
    out = []
    for mu in range(state.n + 1):
        vals = np.imag(phi * np.conj(to_point(dphi[mu]))) + mod2 * to_point(state.a[mu]).real
        out.append(from_point(vals, grid, True))
    return tuple(out)


def rhs_N(state: MKGState) -> tuple[SpectralScalar, ...]:
    """N_mu = -Im(phi conj(d_mu phi)) - A_mu |phi|^2."""
    grid = state.grid
    phi = to_point(state.phi)
    mod2 = np.abs(phi) ** 2
    dphi = [state.phi_t] + [derivative(state.phi, k) for k in range(state.n)]
    out = []
    for mu in range(state.n + 1):
        vals = -np.imag(phi * np.conj(to_point(dphi[mu]))) - to_point(state.a[mu]).real * mod2
        out.append(from_point(vals, grid, True))
    return tuple(out)


def rhs_M(state: MKGState) -> SpectralScalar:
    """M = 2i A^mu d_mu phi + A_mu A^mu phi + m^2 phi."""
    phi = to_point(state.phi)
    a = [to_point(f).real for f in state.a]
    drive = -a[0] * to_point(state.phi_t)
    quad = -a[0] ** 2
    for j in range(state.n):
        drive = drive + a[j + 1] * to_point(derivative(state.phi, j))
        quad = quad + a[j + 1] ** 2
    return from_point(2j * drive + (quad + state.m**2) * phi, state.grid, False)


def _lorenz_shift(state: MKGState) -> list[SpectralScalar]:
    # D^{-2} grad d_t A_0, symbol i xi_j / |xi|^2
    grid = state.grid
    return [
        SpectralScalar(grid, 1j * grid.xi[j] * grid.inv_xi2 * state.a_t[0].coeffs, True, check=False)
        for j in range(state.n)
    ]


def rhs_Mtilde(state: MKGState) -> SpectralScalar:
    """M~ = -2i(A_0 phi_t + D^{-2} grad d_t A_0 . grad phi - A^df . grad phi)
    + A_mu A^mu phi + m^2 phi.

    The constant part of the spatial potential is divergence- and curl-free;
    it is kept with A^df so that M~ = M whenever the Lorenz condition holds.
    """
    n = state.n
    split = helmholtz_split(state.a[1:])
    adf = [
        split.df[j] + SpectralScalar(state.grid, _const(state.grid, split.mean[j]), True, check=False)
        for j in range(n)
    ]
    g = _lorenz_shift(state)
    out = np.empty(state.grid.size, dtype=np.complex128)
    flat = lambda f: np.ascontiguousarray(to_point(f).reshape(-1))  # noqa: E731
    kernels.mtilde(
        flat(state.phi),
        flat(state.phi_t),
        np.stack([flat(derivative(state.phi, j)) for j in range(n)]),
        np.ascontiguousarray(np.stack([flat(f).real for f in state.a])),
        np.ascontiguousarray(np.stack([flat(f).real for f in g])),
        np.ascontiguousarray(np.stack([flat(f).real for f in adf])),
        float(state.m) ** 2,
        out,
    )
    return from_point(out.reshape(state.grid.shape), state.grid, False)


def _const(grid: TorusGrid, value: complex) -> np.ndarray:
    c = np.zeros(grid.shape, dtype=np.complex128)
    c[grid.zero_mode] = value
    return c


def faraday_sources(state: MKGState, flip_q0: bool = False) -> Faraday:
    """box F_{mu nu} sources, stored for mu < nu.

    S_k0 = Im Q_0k(phi, conj phi) + d_t(A_k |phi|^2) - d_k(A_0 |phi|^2)
    S_kl = Im Q_lk(phi, conj phi) + d_l(A_k |phi|^2) - d_k(A_l |phi|^2)

    and the stored (0, k) entry is S_0k = -S_k0.  ``flip_q0`` reverses the
    sign of the Im Q_0k term (a deliberately wrong source for negative
    controls).
    """
    grid = state.grid
    n = state.n
    phi = to_point(state.phi)
    phi_t = to_point(state.phi_t)
    grad = [to_point(derivative(state.phi, k)) for k in range(n)]
    a = [to_point(f).real for f in state.a]
    a_t = [to_point(f).real for f in state.a_t]
    mod2 = np.abs(phi) ** 2
    weighted = [from_point(a[mu] * mod2, grid, True) for mu in range(n + 1)]
    sign = -1.0 if flip_q0 else 1.0

    out = {}
    for k in range(1, n + 1):
        # Im Q_0k(phi, conj phi) = 2 Im(phi_t conj(d_k phi))
        pw = sign * 2.0 * np.imag(phi_t * np.conj(grad[k - 1]))
        pw = pw + a_t[k] * mod2 + 2.0 * a[k] * np.real(np.conj(phi) * phi_t)
        s_k0 = from_point(pw, grid, True) - derivative(weighted[0], k - 1)
        out[(0, k)] = -s_k0
    for j in range(1, n + 1):
        for k in range(j + 1, n + 1):
            # S_jk = Im Q_kj + d_k(A_j|phi|^2) - d_j(A_k|phi|^2)
            q = 2.0 * np.imag(grad[k - 1] * np.conj(grad[j - 1]))
            out[(j, k)] = (
                from_point(q, grid, True)
                + derivative(weighted[j], k - 1)
                - derivative(weighted[k], j - 1)
            )
    return Faraday(grid, out)


# ---------------------------------------------------------------------------
# Packed fast path used by the integrators


class RightHandSide:
    """Accelerations G for packed arrays.

    Channel layout: 0 = phi, 1..n+1 = A_0..A_n, then (optionally) one channel
    per stored Faraday pair in :meth:`Faraday.pairs` order.
    """

    def __init__(self, grid: TorusGrid, m: float, dealias: bool = True, faraday: bool = False, flip_q0: bool = False):
        self.grid = grid
        self.n = grid.n
        self.m2 = float(m) ** 2
        self.mask = grid.dealias_mask.astype(float) if dealias else np.ones(grid.shape)
        self.faraday = faraday
        self.flip = -1.0 if flip_q0 else 1.0
        self.pairs = Faraday.pairs(grid.n)
        n = grid.n
        self.channels = n + 2 + (len(self.pairs) if faraday else 0)
        xi = [np.broadcast_to(k, grid.shape) for k in grid.xi]
        self.ixi = np.stack([1j * k for k in xi])
        inv = grid.inv_xi2
        self.shift = np.stack([1j * k * inv for k in xi])
        # projector onto the curl-free part, xi_j xi_k / |xi|^2
        self.cf = np.stack([np.stack([xi[j] * xi[k] * inv for k in range(n)]) for j in range(n)])

    def __call__(self, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        grid, n, mask = self.grid, self.n, self.mask
        M = grid.size
        phi_h = y[0] * mask
        a_h = y[1 : n + 2] * mask
        adf_h = a_h[1:] - np.einsum("jk...,k...->j...", self.cf, a_h[1:])
        spec = [phi_h, v[0] * mask, *(self.ixi * phi_h), *a_h, *(self.shift * (v[1] * mask)), *adf_h]
        if self.faraday:
            spec.extend(v[2 : n + 2] * mask)
        pts = grid.ifft(np.stack(spec)).reshape(len(spec), M)
        phi = np.ascontiguousarray(pts[0])
        phi_t = np.ascontiguousarray(pts[1])
        grad = np.ascontiguousarray(pts[2 : n + 2])
        a = np.ascontiguousarray(pts[n + 2 : 2 * n + 3].real)
        g = np.ascontiguousarray(pts[2 * n + 3 : 3 * n + 3].real)
        adf = np.ascontiguousarray(pts[3 * n + 3 : 4 * n + 3].real)

        dphi = np.ascontiguousarray(pts[1 : n + 2])
        jmu = np.empty((n + 1, M))
        kernels.current(phi, dphi, a, jmu)
        mt = np.empty(M, dtype=np.complex128)
        kernels.mtilde(phi, phi_t, grad, a, g, adf, self.m2, mt)

        out = [-mt, *jmu]
        if self.faraday:
            a_t = pts[4 * n + 3 : 5 * n + 3].real
            mod2 = phi.real**2 + phi.imag**2
            out.extend(a * mod2)  # A_mu |phi|^2
            for k in range(1, n + 1):
                pw = self.flip * 2.0 * np.imag(phi_t * np.conj(grad[k - 1]))
                out.append(pw + a_t[k - 1] * mod2 + 2.0 * a[k] * np.real(np.conj(phi) * phi_t))
            for j in range(1, n + 1):
                for k in range(j + 1, n + 1):
                    out.append(2.0 * np.imag(grad[k - 1] * np.conj(grad[j - 1])))
        G = grid.fft(np.stack(out).reshape((len(out),) + grid.shape)) * mask
        acc = np.empty((self.channels,) + grid.shape, dtype=np.complex128)
        acc[: n + 2] = G[: n + 2]
        acc[1][grid.zero_mode] = 0.0
        if self.faraday:
            w = G[n + 2 : 2 * n + 3]
            pk = G[2 * n + 3 : 3 * n + 3]
            pq = G[3 * n + 3 :]
            idx = 0
            for c, (mu, nu) in enumerate(self.pairs):
                if mu == 0:
                    # G for F_0k is +S_k0
                    acc[n + 2 + c] = pk[nu - 1] - self.ixi[nu - 1] * w[0]
                else:
                    s = pq[idx] + self.ixi[nu - 1] * w[mu] - self.ixi[mu - 1] * w[nu]
                    acc[n + 2 + c] = -s
                    idx += 1
        return acc


class _Propagator:
    def __init__(self, grid: TorusGrid, h: float):
        k = grid.xi_abs.reshape(-1)
        self.c = np.cos(k * h)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.s = np.where(k > 0, np.sin(k * h) / np.where(k > 0, k, 1.0), h)
        self.ws = k * np.sin(k * h)

    def __call__(self, f: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        shape = f.shape
        f2 = np.ascontiguousarray(f.reshape(shape[0], -1), dtype=np.complex128).copy()
        v2 = np.ascontiguousarray(v.reshape(shape[0], -1), dtype=np.complex128).copy()
        kernels.propagate(f2, v2, self.c, self.s, self.ws)
        return f2.reshape(shape), v2.reshape(shape)


class _Stepper:
    def __init__(self, rhs: RightHandSide, scheme: SchemeSpec):
        self.rhs = rhs
        self.scheme = scheme
        h = scheme.dt
        grid = rhs.grid
        self.full = _Propagator(grid, h)
        self.half = _Propagator(grid, 0.5 * h)
        x = 0.5 * grid.xi_abs * h
        self.filt = np.sinc(x / np.pi) ** 2

    def __call__(self, y: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.scheme.kind is Scheme.RK4:
            return self._rk4(y, v)
        return self._gautschi(y, v)

    def _rk4(self, y, v):
        h = self.scheme.dt
        G = self.rhs
        zero = np.zeros_like(y)
        k1 = G(y, v)
        ey, ev = self.half(y, v)
        y2, v2 = self.half(y, v + 0.5 * h * k1)
        k2 = G(y2, v2)
        y3, v3 = ey, ev + 0.5 * h * k2
        k3 = G(y3, v3)
        py, pv = self.half(zero, k3)
        fy, fv = self.full(y, v)
        y4, v4 = fy + h * py, fv + h * pv
        k4 = G(y4, v4)
        ay, av = self.full(zero, k1)
        by, bv = self.half(zero, k2 + k3)
        y_new = fy + h / 6.0 * (ay + 2.0 * by)
        v_new = fv + h / 6.0 * (av + 2.0 * bv + k4)
        return y_new, v_new

    def _kick(self, y, v, tau):
        G1 = self.rhs(y, v)
        vs = v + tau * self.filt * G1
        G2 = self.rhs(y, vs)
        return v + 0.5 * tau * self.filt * (G1 + G2)

    def _gautschi(self, y, v):
        h = self.scheme.dt
        v = self._kick(y, v, 0.5 * h)
        y, v = self.full(y, v)
        v = self._kick(y, v, 0.5 * h)
        return y, v


def _check_finite(y: np.ndarray, v: np.ndarray, t: float) -> None:
    norm = float(np.sqrt(np.sum(np.abs(y) ** 2) + np.sum(np.abs(v) ** 2)))
    if not math.isfinite(norm) or norm > BLOWUP_NORM:
        raise BlowUpError(t, norm)


def step(state: MKGState, scheme: SchemeSpec, *, nonlinear: bool = True) -> MKGState:
    """Advance ``state`` by ``scheme.dt`` (negative dt runs backwards).

    ``nonlinear=False`` switches the right-hand side off (free wave flow).
    """
    grid = state.grid
    rhs = RightHandSide(grid, state.m, scheme.dealias)
    if not nonlinear:
        rhs = _Free(rhs)
    y, v = state.pack()
    y, v = _Stepper(rhs, scheme)(y, v)
    t = state.t + scheme.dt
    _check_finite(y, v, t)
    return MKGState.from_packed(grid, y, v, t, state.m)


class _Free:
    def __init__(self, rhs: RightHandSide):
        self.grid = rhs.grid
        self.channels = rhs.channels

    def __call__(self, y, v):
        return np.zeros((self.channels,) + self.grid.shape, dtype=np.complex128)


# ---------------------------------------------------------------------------
# Driver


@dataclass
class ObserverContext:
    """What an observer sees besides the current state."""

    prev: MKGState | None
    faraday: Faraday | None
    scheme: SchemeSpec
    step_index: int


Observer = Callable[[MKGState, ObserverContext], float]


@dataclass
class Evolution:
    times: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    final: MKGState | None = None
    faraday: Faraday | None = None
    snapshots: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.series[name])

    def records(self):
        from .diagnostics import DiagnosticRecord

        for i, t in enumerate(self.times):
            yield DiagnosticRecord(t, {k: v[i] for k, v in self.series.items()})


def _pack_faraday(F: Faraday) -> np.ndarray:
    return np.stack([F.f[p].coeffs for p in Faraday.pairs(F.grid.n)])


def _unpack_faraday(grid: TorusGrid, arr: np.ndarray) -> Faraday:
    return Faraday(
        grid,
        {p: SpectralScalar(grid, arr[c].copy(), True, check=False) for c, p in enumerate(Faraday.pairs(grid.n))},
    )


def initial_faraday_rate(state: MKGState, F: Faraday) -> Faraday:
    """d_t F at t=0 from the Maxwell equations.

    d_t F_0l = j_l - d_k F_lk (from d^nu F_l nu = j_l) and
    d_t F_jk = d_j F_0k - d_k F_0j.
    """
    grid = state.grid
    n = state.n
    j = current(state)
    out = {}
    for l in range(1, n + 1):
        div = SpectralScalar.zeros(grid)
        for k in range(1, n + 1):
            div = div + derivative(F[l, k], k - 1)
        out[(0, l)] = j[l] - div
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            out[(a, b)] = derivative(F[0, b], a - 1) - derivative(F[0, a], b - 1)
    return Faraday(grid, {k: dealias(v) for k, v in out.items()})


def evolve(
    data,
    T: float,
    scheme: SchemeSpec,
    observers: Mapping[str, Observer] | None = None,
    *,
    cadence: int = 1,
    faraday: bool = False,
    flip_q0: bool = False,
    snapshot_every: int | None = None,
    snapshot_dir=None,
    nonlinear: bool = True,
) -> Evolution:
    """Integrate from t=0 to T.

    ``data`` is an :class:`~mkglab.initdata.InitialData` or an
    :class:`MKGState`.  Observers run at t=0, every ``cadence`` steps and at
    the final time.  With ``faraday=True`` the Faraday tensor is co-evolved
    from its own wave equations (sources per :func:`faraday_sources`) and
    handed to observers through the context.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if scheme.dt <= 0:
        raise ValueError("evolve needs dt > 0")
    if cadence < 1:
        raise ValueError("cadence must be >= 1")
    if observers is None:
        from .diagnostics import standard_observers

        observers = standard_observers()
    state = data.to_state() if hasattr(data, "to_state") else data
    grid = state.grid
    n = grid.n

    nsteps = max(1, int(round(T / scheme.dt)))
    h = T / nsteps
    sch = scheme.with_dt(h)
    rhs = RightHandSide(grid, state.m, sch.dealias, faraday, flip_q0)
    stepper = _Stepper(rhs if nonlinear else _Free(rhs), sch)

    y, v = state.pack()
    F = None
    if faraday:
        F0 = data.F0 if hasattr(data, "F0") else faraday_from_potential(state)
        Ft0 = initial_faraday_rate(state, F0)
        y = np.concatenate([y, _pack_faraday(F0)])
        v = np.concatenate([v, _pack_faraday(Ft0)])
        F = F0

    result = Evolution(series={name: [] for name in observers})
    snap_dir = Path(snapshot_dir) if snapshot_dir is not None else None

    def observe(st, prev, i):
        ctx = ObserverContext(prev, F, sch, i)
        result.times.append(st.t)
        for name, fn in observers.items():
            result.series[name].append(float(fn(st, ctx)))

    def snapshot(st, i):
        if snap_dir is None or not snapshot_every or i % snapshot_every:
            return
        snap_dir.mkdir(parents=True, exist_ok=True)
        path = snap_dir / f"state_{i:07d}.mkgs"
        save_snapshot(st, path)
        result.snapshots.append(str(path))

    observe(state, None, 0)
    snapshot(state, 0)
    prev = state
    for i in range(1, nsteps + 1):
        t = i * h
        try:
            y, v = stepper(y, v)
            _check_finite(y, v, t)
        except BlowUpError as exc:
            exc.series = result
            exc.state = prev
            result.final = prev
            raise
        cur = MKGState.from_packed(grid, y[: n + 2], v[: n + 2], t, state.m)
        if faraday:
            F = _unpack_faraday(grid, y[n + 2 :])
        if i % cadence == 0 or i == nsteps:
            observe(cur, prev, i)
        snapshot(cur, i)
        prev = cur
    result.final = prev
    result.faraday = F
    return result


def write_series_csv(evo: Evolution, path) -> None:
    """CSV with header ``time,<names>``; floats at 17 significant digits."""
    names = list(evo.series)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", *names])
        for i, t in enumerate(evo.times):
            w.writerow([f"{t:.17g}", *(f"{evo.series[k][i]:.17g}" for k in names)])


def write_series_json(evo: Evolution, path) -> None:
    Path(path).write_text(json.dumps({"time": evo.times, **evo.series}, indent=1))
