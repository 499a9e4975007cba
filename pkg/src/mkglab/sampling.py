"""Random smooth fields and states for experiments and tests."""

from __future__ import annotations

import numpy as np

from .fields import MKGState
from .grid import SpectralScalar, TorusGrid, _hermitian_partner, derivative

__all__ = ["random_field", "random_state", "lorenz_compatible"]


def random_field(
    grid: TorusGrid,
    rng: np.random.Generator,
    *,
    real: bool = True,
    width: float = 3.0,
    amplitude: float = 1.0,
    mean_free: bool = False,
) -> SpectralScalar:
    """Gaussian-envelope random field, dealiased, with L^2 norm ``amplitude``.

    ``width`` is the spectral standard deviation in frequency units; values
    well below ``rho * N`` keep products nearly alias-free.
    """
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c *= np.exp(-grid.xi2 / (2.0 * width**2))
    c = np.where(grid.dealias_mask, c, 0.0)
    if real:
        c = 0.5 * (c + _hermitian_partner(c, grid.n))
    if mean_free:
        c[grid.zero_mode] = 0.0
    nrm = np.sqrt(np.sum(np.abs(c) ** 2))
    if nrm > 0:
        c *= amplitude / nrm
    return SpectralScalar(grid, c, real, check=False)


def lorenz_compatible(state: MKGState) -> MKGState:
    """Replace d_t A_0 by d_j A_j so that the Lorenz condition holds exactly."""
    div = SpectralScalar.zeros(state.grid, is_real=True)
    for j in range(state.n):
        div = div + derivative(state.a[j + 1], j)
    a_t = (div, *state.a_t[1:])
    return MKGState(state.t, state.phi, state.phi_t, state.a, a_t, state.m)


def random_state(
    grid: TorusGrid,
    rng: np.random.Generator,
    *,
    width: float = 3.0,
    amplitude: float = 1.0,
    m: float = 1.0,
    mean_free: bool = True,
    lorenz: bool = False,
) -> MKGState:
    """A random smooth state; ``lorenz=True`` enforces d_t A_0 = d_j A_j."""
    kw = dict(width=width, amplitude=amplitude, mean_free=mean_free)
    phi = random_field(grid, rng, real=False, **kw)
    phi_t = random_field(grid, rng, real=False, **kw)
    a = tuple(random_field(grid, rng, **kw) for _ in range(grid.n + 1))
    a_t = tuple(random_field(grid, rng, **kw) for _ in range(grid.n + 1))
    state = MKGState(0.0, phi, phi_t, a, a_t, m)
    return lorenz_compatible(state) if lorenz else state
