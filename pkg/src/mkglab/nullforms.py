"""Null forms, the Helmholtz split of the spatial potential, and the null
structure of A^mu d_mu phi.

Signs follow the table in :mod:`mkglab.fields`.  With the Riesz transform
R_k = D^{-1} d_k (symbol i xi_k / |xi|):

    A^df_j = R_k (R_j A_k - R_k A_j),      A^cf_j = -R_j R_k A_k,

and, when d_t A_0 = d_k A_k (Lorenz) and all fields are mean-free,

    A^mu d_mu phi = P1 + P2,
    P1 = -sum_j Q_0j(D^{-1} R_j A_0, phi),
    P2 = -1/2 sum_{j != k} Q_jk(D^{-1}(R_j A_k - R_k A_j), phi).

The P2 sum runs over all ordered pairs (j, k) with the factor 1/2, which is
the same as j < k with factor 1.  The smoothing operator in P2 must be D^{-1}:
with Lambda^{-1} = <D>^{-1} the identity is off by a relative O(|xi|^{-2}).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .fields import MKGState
from .grid import MultiplierSymbol, SpectralScalar, apply_multiplier, dealias, derivative, transform

__all__ = [
    "FieldWithTimeDeriv",
    "HelmholtzSplit",
    "InteractionSplit",
    "null_form",
    "helmholtz_split",
    "decompose_interaction",
    "to_point",
    "from_point",
]


def to_point(f: SpectralScalar) -> np.ndarray:
    """Point values of the dealiased field."""
    return transform(dealias(f))


def from_point(values: np.ndarray, grid, is_real: bool | None = None) -> SpectralScalar:
    """Forward transform of a pointwise product, dealiased."""
    out = dealias(transform(values, grid))
    if is_real is not None and is_real != out.is_real:
        out = SpectralScalar(grid, out.coeffs, is_real, check=False)
    return out


@dataclass(frozen=True, eq=False)
class FieldWithTimeDeriv:
    """A spatial field paired with its time derivative."""

    f: SpectralScalar
    f_t: SpectralScalar

    def __post_init__(self) -> None:
        if self.f.grid != self.f_t.grid:
            raise ValueError("field and time derivative must share a grid")

    def d(self, alpha: int) -> SpectralScalar:
        """d_alpha with alpha = 0 the stored time derivative."""
        if alpha == 0:
            return self.f_t
        return derivative(self.f, alpha - 1)


def null_form(alpha: int, beta: int, u: FieldWithTimeDeriv, v: FieldWithTimeDeriv) -> SpectralScalar:
    """Q_{alpha beta}(u, v) = d_alpha u d_beta v - d_beta u d_alpha v."""
    grid = u.f.grid
    n = grid.n
    if not (0 <= alpha <= n and 0 <= beta <= n):
        raise ValueError(f"indices must lie in 0..{n}")
    real = u.f.is_real and v.f.is_real
    if alpha == beta:
        return SpectralScalar.zeros(grid, is_real=real)
    q = to_point(u.d(alpha)) * to_point(v.d(beta)) - to_point(u.d(beta)) * to_point(v.d(alpha))
    return from_point(q, grid, real)


class HelmholtzSplit(NamedTuple):
    df: tuple[SpectralScalar, ...]
    cf: tuple[SpectralScalar, ...]
    mean: tuple[complex, ...]


def _riesz(f: SpectralScalar, k: int) -> SpectralScalar:
    return apply_multiplier(f, MultiplierSymbol.riesz(k))


def helmholtz_split(a: Sequence[SpectralScalar]) -> HelmholtzSplit:
    """Divergence-free and curl-free parts of a spatial vector field.

    The zero modes belong to neither part and are returned as ``mean``.
    """
    a = tuple(a)
    n = len(a)
    if n == 0 or n != a[0].grid.n:
        raise ValueError("helmholtz_split expects the n spatial components")
    grid = a[0].grid
    # R_k A_k summed
    div_r = SpectralScalar.zeros(grid, is_real=a[0].is_real)
    for k in range(n):
        div_r = div_r + _riesz(a[k], k)
    cf = tuple(-_riesz(div_r, j) for j in range(n))
    df = []
    for j in range(n):
        acc = SpectralScalar.zeros(grid, is_real=a[j].is_real)
        for k in range(n):
            acc = acc + _riesz(_riesz(a[k], j) - _riesz(a[j], k), k)
        df.append(acc)
    return HelmholtzSplit(tuple(df), cf, tuple(f.mean for f in a))


class InteractionSplit(NamedTuple):
    p1: SpectralScalar
    p2: SpectralScalar
    direct: SpectralScalar
    lorenz_residual: float


def _inv_d(f: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(f.grid, f.coeffs * _inv_abs(f.grid), f.is_real, check=False)


def _inv_abs(grid) -> np.ndarray:
    out = np.zeros(grid.shape)
    nz = grid.xi2 > 0
    out[nz] = 1.0 / grid.xi_abs[nz]
    return out


def lorenz_field(state: MKGState) -> SpectralScalar:
    """u = d^mu A_mu = -d_t A_0 + d_j A_j."""
    u = -state.a_t[0]
    for j in range(state.n):
        u = u + derivative(state.a[j + 1], j)
    return u


def interaction_direct(state: MKGState) -> SpectralScalar:
    """A^mu d_mu phi = -A_0 d_t phi + A_j d_j phi, formed pointwise."""
    vals = -to_point(state.a[0]) * to_point(state.phi_t)
    for j in range(state.n):
        vals = vals + to_point(state.a[j + 1]) * to_point(derivative(state.phi, j))
    return from_point(vals, state.grid, False)


def decompose_interaction(state: MKGState) -> InteractionSplit:
    """P1, P2 via null forms, the direct product A^mu d_mu phi, and the
    Lorenz residual ||-d_t A_0 + d_j A_j||."""
    n = state.n
    grid = state.grid
    phi = FieldWithTimeDeriv(state.phi, state.phi_t)

    p1 = SpectralScalar.zeros(grid, is_real=False)
    for j in range(1, n + 1):
        w = FieldWithTimeDeriv(_inv_d(_riesz(state.a[0], j - 1)), _inv_d(_riesz(state.a_t[0], j - 1)))
        p1 = p1 - null_form(0, j, w, phi)

    p2 = SpectralScalar.zeros(grid, is_real=False)
    zero = SpectralScalar.zeros(grid, is_real=True)
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            if j == k:
                continue
            b = _inv_d(_riesz(state.a[k], j - 1) - _riesz(state.a[j], k - 1))
            p2 = p2 - 0.5 * null_form(j, k, FieldWithTimeDeriv(b, zero), phi)

    return InteractionSplit(p1, p2, interaction_direct(state), lorenz_field(state).norm())
