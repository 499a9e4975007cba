"""Pure-numpy reference kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature; ``mkglab.kernels`` picks one at import.  Arrays are flattened over
the spatial lattice (last axis) and must be C-contiguous.
"""

import numpy as np
import scipy.sparse as sp


def propagate(f, v, c, s, ws):
    """In-place exact wave flow per mode: f <- c f + s v, v <- -ws f + c v."""
    f_old = f.copy()
    f *= c
    f += s * v
    v *= c
    v -= ws * f_old


def current(phi, dphi, a, out):
    """out[mu] = Im(phi conj(dphi[mu])) + |phi|^2 a[mu]."""
    out[...] = np.imag(phi[None, :] * np.conj(dphi)) + (np.abs(phi) ** 2)[None, :] * a


def mtilde(phi, phi_t, grad, a, g, adf, m2, out):
    """-2i(a0 phi_t + (g - adf).grad phi) + (-a0^2 + |a_sp|^2) phi + m2 phi."""
    a0 = a[0]
    drift = a0 * phi_t + np.sum((g - adf) * grad, axis=0)
    quad = -(a0**2) + np.sum(a[1:] ** 2, axis=0)
    out[...] = -2j * drift + (quad + m2) * phi


def pair_product(U, V, index, n_out):
    """G[t, index[i, j]] += U[t, i] V[t, j] over all pairs (i, j)."""
    nt, ku = U.shape
    kv = V.shape[1]
    prod = (U[:, :, None] * V[:, None, :]).reshape(nt, ku * kv)
    rows = np.arange(ku * kv)
    scatter = sp.csr_matrix((np.ones(ku * kv), (rows, index.reshape(-1))), shape=(ku * kv, n_out))
    return np.asarray((scatter.T @ prod.T).T)


def hsb_sumsq(coeffs, tau_abs, xi_abs, spatial_w2, b):
    """sum spatial_w2[xi] <|tau| - |xi|>^{2b} |coeffs[tau, xi]|^2."""
    dist = tau_abs[:, None] - xi_abs[None, :]
    w = (1.0 + dist**2) ** b * spatial_w2[None, :]
    return float(np.sum(w * (coeffs.real**2 + coeffs.imag**2)))
