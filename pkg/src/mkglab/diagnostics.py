"""Consistency measurements on evolving states.

Column contract of the standard observer set (CSV/JSON series):

    gauge_residual_L2    ||u||, u = -d_t A_0 + d_j A_j
    charge               lattice mean of j_0
    maxwell_residual_L2  ||d^nu F_mu nu - j_mu|| / max(1, ||F||)
    faraday_gap_L2       ||F_evolved - F(A)|| / max(1, ||F(A)||), NaN if F is not co-evolved
    phi_Hs               ||phi||_{H^s}
    DA_Hr_minus_1        ||D A||_{H^{r-1}}
    m_gap_L2             ||M - M~||
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dynamics import ObserverContext, current, rhs_M, rhs_Mtilde
from .fields import Faraday, MKGState, SobolevExponents, faraday_from_potential, sobolev_norm
from .grid import SpectralScalar, derivative, laplacian
from .nullforms import lorenz_field

__all__ = [
    "DiagnosticRecord",
    "MaxwellResidual",
    "RECORD_KEYS",
    "gauge_residual",
    "charge",
    "maxwell_residual",
    "faraday_consistency",
    "faraday_gap",
    "theorem_norm_report",
    "standard_observers",
    "record",
]

RECORD_KEYS = (
    "gauge_residual_L2",
    "charge",
    "maxwell_residual_L2",
    "faraday_gap_L2",
    "phi_Hs",
    "DA_Hr_minus_1",
    "m_gap_L2",
)


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    values: dict = field(default_factory=dict)
    blowup: bool = False

    def __post_init__(self) -> None:
        if not self.blowup and not all(math.isfinite(v) for k, v in self.values.items() if k != "faraday_gap_L2"):
            object.__setattr__(self, "blowup", True)

    def as_dict(self) -> dict:
        return {"t": self.t, **self.values, "blowup": self.blowup}


def gauge_residual(state: MKGState) -> tuple[SpectralScalar, float]:
    """u = -d_t A_0 + d_j A_j and its L^2 norm."""
    u = lorenz_field(state)
    return u, u.norm()


def charge(state: MKGState) -> float:
    """Lattice mean of the charge density j_0."""
    return float(current(state)[0].mean.real)


class MaxwellResidual(NamedTuple):
    per_mu: tuple[float, ...]
    total: float
    relative: float


def _time_derivative_from_equations(state: MKGState) -> Faraday:
    # d_t F_0k = d_t^2 A_k - d_k d_t A_0 with d_t^2 A_k = Delta A_k + j_k
    n = state.n
    j = current(state)
    f = {}
    for k in range(1, n + 1):
        f[(0, k)] = laplacian(state.a[k]) + j[k] - derivative(state.a_t[0], k - 1)
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            f[(a, b)] = derivative(state.a_t[b], a - 1) - derivative(state.a_t[a], b - 1)
    return Faraday(state.grid, f)


def maxwell_residual(state: MKGState, state_prev: MKGState | None = None) -> MaxwellResidual:
    """||d^nu F_mu nu - j_mu|| per mu, their l^2 total and total/max(1, ||F||).

    With two states the residual is taken at their midpoint, d_t F by the
    difference quotient (second order).  Without ``state_prev`` d_t F comes
    from the evolution equations of the potential.  The mu = 0 component is
    compared with j_0 minus its mean (neutralizing background).
    """
    n = state.n
    grid = state.grid
    F1 = faraday_from_potential(state)
    j1 = current(state)
    if state_prev is None:
        F = F1
        j = j1
        Ft = _time_derivative_from_equations(state)
    else:
        dt = state.t - state_prev.t
        if dt == 0:
            raise ValueError("states must be at different times")
        F0 = faraday_from_potential(state_prev)
        j0 = current(state_prev)
        F = (F0 + F1).scaled(0.5)
        j = tuple((a + b) * 0.5 for a, b in zip(j0, j1))
        Ft = (F1 - F0).scaled(1.0 / dt)
    per = []
    for mu in range(n + 1):
        # d^nu F_mu nu = -d_t F_mu0 + d_k F_mu k
        r = -Ft[mu, 0] if mu else SpectralScalar.zeros(grid)
        for k in range(1, n + 1):
            r = r + derivative(F[mu, k], k - 1)
        src = j[mu]
        if mu == 0:
            src = src - SpectralScalar(grid, _const(grid, src.mean), True, check=False)
        per.append((r - src).norm())
    total = float(np.sqrt(sum(p * p for p in per)))
    return MaxwellResidual(tuple(per), total, total / max(1.0, F.norm()))


def _const(grid, value):
    c = np.zeros(grid.shape, dtype=np.complex128)
    c[grid.zero_mode] = value
    return c


def faraday_gap(evolved: Faraday, state: MKGState) -> float:
    """||F_evolved - F(A)|| / max(1, ||F(A)||) at one time."""
    Fp = faraday_from_potential(state)
    return (evolved - Fp).norm() / max(1.0, Fp.norm())


def faraday_consistency(evolved_F: Sequence[Faraday], states: Sequence[MKGState]) -> float:
    """sup over saved times of the Faraday gap."""
    if len(evolved_F) != len(states):
        raise ValueError("trajectories must have equal length")
    return max((faraday_gap(F, s) for F, s in zip(evolved_F, states)), default=0.0)


def theorem_norm_report(state: MKGState, exps: SobolevExponents) -> dict:
    """Spatial proxies of the solution norms in the well-posedness statement."""
    s, r = exps.s, exps.r
    grid = state.grid
    w = grid.japanese ** (2.0 * (r - 1.0)) * grid.xi2
    da = np.sqrt(sum(np.sum(w * np.abs(f.coeffs) ** 2) for f in state.a))
    at = np.sqrt(sum(sobolev_norm(f, r - 1.0) ** 2 for f in state.a_t))
    F = faraday_from_potential(state)
    fn = np.sqrt(sum(sobolev_norm(c, s - 1.0) ** 2 for _, c in F.components()))
    return {
        "phi_Hs": sobolev_norm(state.phi, s),
        "phi_t_Hs_minus_1": sobolev_norm(state.phi_t, s - 1.0),
        "DA_Hr_minus_1": float(da),
        "A_t_Hr_minus_1": float(at),
        "F_Hs_minus_1": float(fn),
    }


def standard_observers(exps: SobolevExponents | None = None) -> dict:
    """Observer callables for every column of :data:`RECORD_KEYS`."""
    exps = exps or SobolevExponents(1.0, 1.0)

    def maxwell(st: MKGState, ctx: ObserverContext) -> float:
        return maxwell_residual(st, ctx.prev).relative

    def fgap(st: MKGState, ctx: ObserverContext) -> float:
        return math.nan if ctx.faraday is None else faraday_gap(ctx.faraday, st)

    def norms(key):
        return lambda st, ctx: theorem_norm_report(st, exps)[key]

    return {
        "gauge_residual_L2": lambda st, ctx: gauge_residual(st)[1],
        "charge": lambda st, ctx: charge(st),
        "maxwell_residual_L2": maxwell,
        "faraday_gap_L2": fgap,
        "phi_Hs": norms("phi_Hs"),
        "DA_Hr_minus_1": norms("DA_Hr_minus_1"),
        "m_gap_L2": lambda st, ctx: (rhs_M(st) - rhs_Mtilde(st)).norm(),
    }


def record(state: MKGState, ctx: ObserverContext | None = None, exps: SobolevExponents | None = None) -> DiagnosticRecord:
    obs = standard_observers(exps)
    if ctx is None:
        from .dynamics import SchemeSpec

        ctx = ObserverContext(None, None, SchemeSpec(), 0)
    return DiagnosticRecord(state.t, {k: float(fn(state, ctx)) for k, fn in obs.items()})
