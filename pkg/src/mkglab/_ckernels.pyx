# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of ``_pykernels``; identical signatures and semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


def propagate(double complex[:, ::1] f, double complex[:, ::1] v,
              const double[::1] c, const double[::1] s, const double[::1] ws):
    cdef Py_ssize_t B = f.shape[0], M = f.shape[1], b, k
    cdef double complex fo
    with nogil:
        for b in range(B):
            for k in range(M):
                fo = f[b, k]
                f[b, k] = c[k] * fo + s[k] * v[b, k]
                v[b, k] = c[k] * v[b, k] - ws[k] * fo


def current(const double complex[::1] phi, const double complex[:, ::1] dphi,
            const double[:, ::1] a, double[:, ::1] out):
    cdef Py_ssize_t B = dphi.shape[0], M = dphi.shape[1], b, k
    cdef double pr, pi, mod2
    with nogil:
        for k in range(M):
            pr = phi[k].real
            pi = phi[k].imag
            mod2 = pr * pr + pi * pi
            for b in range(B):
                # Im(phi * conj(d)) = pi*dr - pr*di
                out[b, k] = pi * dphi[b, k].real - pr * dphi[b, k].imag + mod2 * a[b, k]


def mtilde(const double complex[::1] phi, const double complex[::1] phi_t,
           const double complex[:, ::1] grad, const double[:, ::1] a,
           const double[:, ::1] g, const double[:, ::1] adf, double m2,
           double complex[::1] out):
    cdef Py_ssize_t n = grad.shape[0], M = phi.shape[0], j, k
    cdef double complex drift
    cdef double quad, a0
    with nogil:
        for k in range(M):
            a0 = a[0, k]
            drift = a0 * phi_t[k]
            quad = -a0 * a0 + m2
            for j in range(n):
                drift = drift + (g[j, k] - adf[j, k]) * grad[j, k]
                quad = quad + a[j + 1, k] * a[j + 1, k]
            out[k] = -2j * drift + quad * phi[k]


def pair_product(const double complex[:, ::1] U, const double complex[:, ::1] V,
                 const cnp.int64_t[:, ::1] index, Py_ssize_t n_out):
    cdef Py_ssize_t nt = U.shape[0], ku = U.shape[1], kv = V.shape[1], t, i, j
    cdef double complex u
    G = np.zeros((nt, n_out), dtype=np.complex128)
    cdef double complex[:, ::1] Gv = G
    with nogil:
        for t in range(nt):
            for i in range(ku):
                u = U[t, i]
                for j in range(kv):
                    Gv[t, index[i, j]] = Gv[t, index[i, j]] + u * V[t, j]
    return G


def hsb_sumsq(const double complex[:, ::1] coeffs, const double[::1] tau_abs,
              const double[::1] xi_abs, const double[::1] spatial_w2, double b):
    cdef Py_ssize_t nt = coeffs.shape[0], M = coeffs.shape[1], t, k
    cdef double total = 0.0, d, c2
    with nogil:
        for t in range(nt):
            for k in range(M):
                c2 = coeffs[t, k].real * coeffs[t, k].real + coeffs[t, k].imag * coeffs[t, k].imag
                if c2 == 0.0:
                    continue
                d = tau_abs[t] - xi_abs[k]
                total += spatial_w2[k] * pow(1.0 + d * d, b) * c2
    return total
