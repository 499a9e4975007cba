"""Constraint-compatible initial data.

The data (phi0, phi1, a0, a0dot, F0) must satisfy

    a0[0] = a0dot[0] = 0,               d_k a0_k = 0,
    d_j a0_k - d_k a0_j = F0_jk,        a0dot_k = F0_0k,
    d_k F0_0k = Im(phi0 conj(phi1)).

On the torus the last (Gauss) constraint is solvable only for neutral data,
so the lattice mean of rho = Im(phi0 conj phi1) is removed and reported as
``dropped_charge``.  The evolution compensates with a uniform neutralizing
background in the A_0 equation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fields import Faraday, MKGState, faraday_from_potential, load_snapshot, save_snapshot
from .grid import SpectralScalar, TorusGrid, dealias, derivative, inv_laplacian, laplacian
from .nullforms import from_point, helmholtz_split, to_point
from .sampling import random_field

__all__ = [
    "InitialData",
    "ConstraintError",
    "build_data",
    "verify_constraints",
    "curl_seed",
    "charge_density",
    "inject_divergence",
    "save_data",
    "load_data",
]

BIANCHI_TOL = 1e-8


class ConstraintError(ValueError):
    """Seed data that cannot satisfy the compatibility conditions."""


@dataclass(frozen=True, eq=False)
class InitialData:
    phi0: SpectralScalar
    phi1: SpectralScalar
    a0: tuple[SpectralScalar, ...]
    a0dot: tuple[SpectralScalar, ...]
    F0: Faraday
    residuals: dict = field(default_factory=dict)
    dropped_charge: float = 0.0
    m: float = 1.0

    @property
    def grid(self) -> TorusGrid:
        return self.phi0.grid

    def to_state(self) -> MKGState:
        return MKGState(0.0, self.phi0, self.phi1, self.a0, self.a0dot, self.m)

    def replace(self, **changes) -> InitialData:
        kw = dict(
            phi0=self.phi0, phi1=self.phi1, a0=self.a0, a0dot=self.a0dot, F0=self.F0,
            residuals=dict(self.residuals), dropped_charge=self.dropped_charge, m=self.m,
        )
        kw.update(changes)
        return InitialData(**kw)


def charge_density(phi0: SpectralScalar, phi1: SpectralScalar) -> SpectralScalar:
    """rho = Im(phi0 conj phi1), formed pointwise and dealiased."""
    rho = np.imag(to_point(phi0) * np.conj(to_point(phi1)))
    return from_point(rho, phi0.grid, True)


def curl_seed(grid: TorusGrid, seed, *, width: float = 3.0, amplitude: float = 1.0) -> Faraday:
    """Spatial 2-form F_jk = d_j w_k - d_k w_j from a random smooth w.

    ``seed`` is an int / Generator (w drawn at random with the given spectral
    width and L^2 amplitude per component) or a sequence of the n components
    of w.
    """
    if isinstance(seed, (int, np.integer, np.random.Generator)):
        rng = np.random.default_rng(seed)
        w = [random_field(grid, rng, real=True, width=width, amplitude=amplitude) for _ in range(grid.n)]
    else:
        w = list(seed)
    f = {}
    for j in range(1, grid.n + 1):
        for k in range(j + 1, grid.n + 1):
            f[(j, k)] = derivative(w[k - 1], j - 1) - derivative(w[j - 1], k - 1)
    return Faraday(grid, f)


def build_data(
    phi0: SpectralScalar,
    phi1: SpectralScalar,
    seed_f=None,
    *,
    divfree_seed=None,
    m: float = 1.0,
) -> InitialData:
    """Construct data satisfying the compatibility conditions.

    Parameters
    ----------
    phi0, phi1 : SpectralScalar
        Scalar-field data (dealiased on entry).
    seed_f : None, int, Generator or Faraday
        Spatial part of F0.  ``None`` gives zero magnetic field; an integer or
        generator draws the curl of a random smooth field; a :class:`Faraday`
        is used as given after a Bianchi check.
    divfree_seed : None, int or Generator
        When set, a random divergence-free field is added to F0_0k.
    m : float
        Klein-Gordon mass carried into the state.
    """
    grid = phi0.grid
    if phi1.grid != grid:
        raise ValueError("phi0 and phi1 must share a grid")
    n = grid.n
    phi0 = dealias(phi0)
    phi1 = dealias(phi1)

    if seed_f is None:
        seed = Faraday(grid, {})
    elif isinstance(seed_f, Faraday):
        if seed_f.grid != grid:
            raise ValueError("seed Faraday lives on a different grid")
        bianchi = seed_f.bianchi_residual()
        if bianchi > BIANCHI_TOL:
            raise ConstraintError(
                f"seed 2-form violates the Bianchi identity (residual {bianchi:.3e} > {BIANCHI_TOL:g}); "
                "no potential reproduces it"
            )
        seed = seed_f
    else:
        seed = curl_seed(grid, seed_f)

    f = {key: dealias(val) for key, val in seed.components(spatial_only=True)}

    zero = SpectralScalar.zeros(grid, is_real=True)
    a0 = [zero]
    for j in range(1, n + 1):
        # a_0j = D^{-2} d_k F_jk = -Delta^{-1} d_k F_jk
        div = zero
        for k in range(1, n + 1):
            if k != j:
                div = div + derivative(seed_get(f, j, k, zero), k - 1)
        a0.append(-inv_laplacian(div))

    rho = charge_density(phi0, phi1)
    dropped = float(rho.mean.real)
    rho_neutral = rho - SpectralScalar(grid, _const(grid, dropped), True, check=False)
    potential = inv_laplacian(rho_neutral)
    e = [derivative(potential, k) for k in range(n)]
    if divfree_seed is not None:
        rng = np.random.default_rng(divfree_seed)
        w = [random_field(grid, rng, real=True, width=3.0, amplitude=0.5) for _ in range(n)]
        df = helmholtz_split(w).df
        e = [e[k] + df[k] for k in range(n)]
    for k in range(1, n + 1):
        f[(0, k)] = e[k - 1]

    a0dot = [zero] + [f[(0, k)] for k in range(1, n + 1)]
    data = InitialData(phi0, phi1, tuple(a0), tuple(a0dot), Faraday(grid, f), {}, dropped, m)
    return data.replace(residuals=verify_constraints(data))


def seed_get(f: dict, j: int, k: int, zero: SpectralScalar) -> SpectralScalar:
    if j < k:
        return f.get((j, k), zero)
    return -f.get((k, j), zero)


def _const(grid: TorusGrid, value: float) -> np.ndarray:
    c = np.zeros(grid.shape, dtype=np.complex128)
    c[grid.zero_mode] = value
    return c


def verify_constraints(data: InitialData) -> dict:
    """Recompute every constraint residual (L^2 norms) from the stored fields."""
    grid = data.grid
    n = grid.n
    a0, a0dot, F = data.a0, data.a0dot, data.F0

    div_a = sum((derivative(a0[k], k - 1) for k in range(1, n + 1)), SpectralScalar.zeros(grid))
    curl_sq = 0.0
    for j in range(1, n + 1):
        for k in range(j + 1, n + 1):
            r = derivative(a0[k], j - 1) - derivative(a0[j], k - 1) - F[j, k]
            curl_sq += r.norm() ** 2
    vel_sq = sum((a0dot[k] - F[0, k]).norm() ** 2 for k in range(1, n + 1))

    rho = np.imag(to_point(data.phi0) * np.conj(to_point(data.phi1)))
    rho_hat = dealias(SpectralScalar.from_physical(grid, rho))
    rho_hat = SpectralScalar(grid, np.where(_zero_mask(grid), 0.0, rho_hat.coeffs), True, check=False)
    div_e = sum((derivative(F[0, k], k - 1) for k in range(1, n + 1)), SpectralScalar.zeros(grid))
    gauss = (div_e - rho_hat).norm()

    u0 = -a0dot[0] + div_a
    # d_t u(0) = -d_t^2 A_0 + d_j d_t A_j with d_t^2 A_0 = Delta A_0 + (j_0 - mean j_0)
    j0_vals = np.imag(to_point(data.phi0) * np.conj(to_point(data.phi1))) + np.abs(to_point(data.phi0)) ** 2 * to_point(a0[0])
    j0 = dealias(SpectralScalar.from_physical(grid, j0_vals))
    j0 = SpectralScalar(grid, np.where(_zero_mask(grid), 0.0, j0.coeffs), True, check=False)
    div_adot = sum((derivative(a0dot[k], k - 1) for k in range(1, n + 1)), SpectralScalar.zeros(grid))
    ut0 = -(laplacian(a0[0]) + j0) + div_adot

    return {
        "eq10_temporal": a0[0].norm() + a0dot[0].norm(),
        "eq12_divergence": div_a.norm(),
        "eq13_curl": float(np.sqrt(curl_sq)),
        "eq14_velocity": float(np.sqrt(vel_sq)),
        "eq15_gauss": gauss,
        "lorenz_u0": u0.norm(),
        "lorenz_ut0": ut0.norm(),
    }


def inject_divergence(data: InitialData, seed=0, size: float = 1.0, width: float = 1.5) -> InitialData:
    """Add a gradient E = grad chi to F0_0k and a0dot_k with ||div E|| = size.

    a0dot_k = F0_0k still holds while the Gauss law is violated by exactly
    ``size`` (a negative control for gauge propagation).
    """
    grid = data.grid
    rng = np.random.default_rng(seed)
    chi = random_field(grid, rng, real=True, width=width, mean_free=True)
    lap = laplacian(chi).norm()
    if lap == 0.0:
        raise ValueError("grid too small for a divergence injection")
    chi = chi * (size / lap)
    e = [derivative(chi, k) for k in range(grid.n)]
    f = dict(data.F0.f)
    for k in range(1, grid.n + 1):
        f[(0, k)] = f[(0, k)] + e[k - 1]
    a0dot = (data.a0dot[0], *(data.a0dot[k] + e[k - 1] for k in range(1, grid.n + 1)))
    out = data.replace(a0dot=a0dot, F0=Faraday(grid, f))
    return out.replace(residuals=verify_constraints(out))


def _zero_mask(grid: TorusGrid) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    mask[grid.zero_mode] = True
    return mask


def save_data(data: InitialData, path) -> tuple[Path, Path]:
    """MKGS snapshot at t=0 plus a JSON sidecar (residuals, dropped_charge)."""
    path = Path(path)
    snap = path.with_suffix(".mkgs")
    side = path.with_suffix(".json")
    save_snapshot(data.to_state(), snap)
    side.write_text(
        json.dumps(
            {
                "dropped_charge": data.dropped_charge,
                "residuals": data.residuals,
                "dealias_fraction": data.grid.dealias_fraction,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return snap, side


def load_data(path) -> InitialData:
    path = Path(path)
    side = path.with_suffix(".json")
    meta = json.loads(side.read_text()) if side.exists() else {}
    state = load_snapshot(path.with_suffix(".mkgs"), meta.get("dealias_fraction", 1.0 / 3.0))
    F = faraday_from_potential(state)
    data = InitialData(
        state.phi, state.phi_t, state.a, state.a_t, F, {}, float(meta.get("dropped_charge", 0.0)), state.m
    )
    return data.replace(residuals=verify_constraints(data))
