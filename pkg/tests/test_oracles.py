"""Spectral operators and nonlinearities against brute-force references on N=8."""

import math

import numpy as np
import pytest

import oracles
from mkglab.dynamics import current, faraday_sources, rhs_M, rhs_Mtilde, rhs_N
from mkglab.estlab import SpaceTimeField, _tau, hsb_norm
from mkglab.fields import sobolev_norm
from mkglab.grid import (
    MultiplierSymbol,
    SpectralScalar,
    TorusGrid,
    apply_multiplier,
    dealias,
    derivative,
    inv_laplacian,
    laplacian,
)
from mkglab.initdata import charge_density
from mkglab.nullforms import FieldWithTimeDeriv, interaction_direct, null_form
from mkglab.sampling import random_field, random_state

TOL = 1e-12
DIMS = [1, 2, 3, 4]


def rel(a, b):
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))


def lattice_field(n, seed, real=True):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((8,) * n)
    if not real:
        v = v + 1j * rng.standard_normal((8,) * n)
    return v


@pytest.mark.parametrize("n", DIMS)
def test_forward_transform_matches_direct_sum(n):
    v = lattice_field(n, 1, real=False)
    g = TorusGrid(n, 8)
    assert rel(SpectralScalar.from_physical(g, v).coeffs, oracles.dft(v)) <= TOL
    assert rel(SpectralScalar.from_physical(g, v).to_physical(), v) <= TOL


@pytest.mark.parametrize("n", DIMS)
def test_derivatives_and_laplacians(n):
    g = TorusGrid(n, 8)
    v = lattice_field(n, 2)
    f = SpectralScalar.from_physical(g, v)
    for k in range(n):
        ref = oracles.apply_symbol(v, lambda xi, k=k: 1j * xi[k])
        assert rel(derivative(f, k).to_physical(), ref.real) <= TOL
    ref = oracles.apply_symbol(v, lambda xi: -sum(x * x for x in xi))
    assert rel(laplacian(f).to_physical(), ref.real) <= TOL
    ref = oracles.apply_symbol(v, lambda xi: 0.0 if not any(xi) else -1.0 / sum(x * x for x in xi))
    assert rel(inv_laplacian(f).to_physical(), ref.real) <= TOL


@pytest.mark.parametrize("n", DIMS)
@pytest.mark.parametrize("alpha", [-1.5, -0.5, 0.7, 2.0])
def test_bessel_and_fractional_multipliers(n, alpha):
    g = TorusGrid(n, 8)
    v = lattice_field(n, 3)
    v = v - v.mean()
    f = SpectralScalar.from_physical(g, v)
    lam = oracles.apply_symbol(v, lambda xi: (1.0 + sum(x * x for x in xi)) ** (alpha / 2))
    assert rel(apply_multiplier(f, MultiplierSymbol.bessel(alpha)).to_physical(), lam.real) <= TOL
    dd = oracles.apply_symbol(v, lambda xi: 0.0 if not any(xi) else math.sqrt(sum(x * x for x in xi)) ** alpha)
    assert rel(apply_multiplier(f, MultiplierSymbol.fractional(alpha)).to_physical(), dd.real) <= TOL


@pytest.mark.parametrize("n", DIMS)
def test_riesz_transforms(n):
    g = TorusGrid(n, 8)
    v = lattice_field(n, 4)
    f = SpectralScalar.from_physical(g, v)
    for k in range(n):
        ref = oracles.apply_symbol(v, lambda xi, k=k: 0.0 if not any(xi) else 1j * xi[k] / math.sqrt(sum(x * x for x in xi)))
        assert rel(apply_multiplier(f, MultiplierSymbol.riesz(k)).to_physical(), ref.real) <= TOL


@pytest.mark.parametrize("n", DIMS)
def test_dealias_mask(n):
    g = TorusGrid(n, 8)
    v = lattice_field(n, 5, real=False)
    f = SpectralScalar.from_physical(g, v)
    assert rel(dealias(f).coeffs, oracles.dft(v) * oracles.dealias_table(n, 8)) <= TOL


@pytest.mark.parametrize("n", DIMS)
def test_norms(n):
    g = TorusGrid(n, 8)
    v = lattice_field(n, 6, real=False)
    f = SpectralScalar.from_physical(g, v)
    assert abs(f.norm() - oracles.l2(v)) <= TOL * oracles.l2(v)
    for s in (-1.0, 0.5, 1.3):
        ref = oracles.sobolev(oracles.dft(v), s)
        assert abs(sobolev_norm(f, s) - ref) <= TOL * ref


@pytest.mark.parametrize("n", DIMS)
def test_hsb_norm_direct_sum(n):
    g = TorusGrid(n, 8)
    Nt = 6
    rng = np.random.default_rng(7)
    vals = rng.standard_normal((Nt,) + g.shape) + 1j * rng.standard_normal((Nt,) + g.shape)
    field = SpaceTimeField.from_samples(g, vals, window="none")
    # temporal direct sum with the same tau labels
    c = np.stack([oracles.dft(vals[m]) for m in range(Nt)])
    ct = np.zeros_like(c)
    for a in range(Nt):
        for m in range(Nt):
            ct[a] += c[m] * np.exp(-2j * np.pi * a * m / Nt) / Nt
    tau = _tau(Nt)
    for s, b in [(0.0, 0.0), (0.8, 0.55), (-0.5, 1.0)]:
        total = 0.0
        for a in range(Nt):
            for idx, xi in oracles.lattice(n, 8):
                xa = math.sqrt(sum(x * x for x in xi))
                total += (1 + xa * xa) ** s * (1 + (abs(tau[a]) - xa) ** 2) ** b * abs(ct[a][idx]) ** 2
        ref = math.sqrt(total)
        assert abs(hsb_norm(field, s, b) - ref) <= TOL * ref


def _state(n, seed, lorenz=False):
    g = TorusGrid(n, 8)
    return random_state(g, np.random.default_rng(seed), width=1.5, lorenz=lorenz, m=0.7)


@pytest.mark.parametrize("n", DIMS)
def test_current_and_N(n):
    st = _state(n, 10)
    ref = oracles.current(st)
    for mu, j in enumerate(current(st)):
        assert rel(j.coeffs, ref[mu]) <= TOL
    for mu, nm in enumerate(rhs_N(st)):
        assert rel(nm.coeffs, -ref[mu]) <= TOL


@pytest.mark.parametrize("n", DIMS)
def test_M_and_Mtilde(n):
    st = _state(n, 11)
    assert rel(rhs_M(st).coeffs, oracles.rhs_M(st)) <= TOL
    assert rel(rhs_Mtilde(st).coeffs, oracles.rhs_Mtilde(st)) <= TOL


@pytest.mark.parametrize("n", DIMS)
def test_null_forms(n):
    g = TorusGrid(n, 8)
    rng = np.random.default_rng(12)
    fs = [random_field(g, rng, real=False, width=1.5) for _ in range(4)]
    u = FieldWithTimeDeriv(fs[0], fs[1])
    v = FieldWithTimeDeriv(fs[2], fs[3])
    pts = [oracles.idft(f.coeffs) for f in fs]
    for a in range(n + 1):
        for b in range(a + 1, n + 1):
            ref = oracles.null_form(a, b, *pts)
            assert rel(null_form(a, b, u, v).coeffs, ref) <= TOL


@pytest.mark.parametrize("n", DIMS)
def test_interaction_and_charge(n):
    st = _state(n, 13)
    phi, phi_t, a, _, grad = oracles.state_points(st)
    vals = -a[0] * phi_t
    for j in range(n):
        vals = vals + a[j + 1] * grad[j]
    assert rel(interaction_direct(st).coeffs, oracles.project(vals)) <= TOL
    rho = oracles.pointwise(lambda p, q: (p * q.conjugate()).imag, phi, phi_t).real
    assert rel(charge_density(st.phi, st.phi_t).coeffs, oracles.project(rho)) <= TOL


@pytest.mark.parametrize("n", [2, 3, 4])
def test_faraday_spatial_sources(n):
    st = _state(n, 14)
    S = faraday_sources(st)
    for key, ref in oracles.faraday_spatial_sources(st).items():
        assert rel(S[key].coeffs, ref) <= TOL
