import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mkglab.grid import MultiplierSymbol, SpectralScalar, TorusGrid, apply_multiplier, derivative
from mkglab.nullforms import (
    FieldWithTimeDeriv,
    decompose_interaction,
    helmholtz_split,
    lorenz_field,
    null_form,
)
from mkglab.sampling import random_field, random_state


def pair(g, rng):
    return FieldWithTimeDeriv(random_field(g, rng, real=False), random_field(g, rng, real=False))


def test_null_form_antisymmetry_and_diagonal():
    g = TorusGrid(2, 16)
    rng = np.random.default_rng(0)
    u, v = pair(g, rng), pair(g, rng)
    assert (null_form(0, 1, u, v) + null_form(1, 0, u, v)).norm() < 1e-15
    assert (null_form(0, 1, u, v) + null_form(0, 1, v, u)).norm() < 1e-15
    assert null_form(2, 2, u, v).norm() == 0.0
    with pytest.raises(ValueError):
        null_form(0, 3, u, v)


def test_null_form_vanishes_on_parallel_plane_waves():
    # u = v = e^{i(|xi| t + xi.x)} at t = 0: Q_0j and Q_jk vanish identically
    g = TorusGrid(2, 16)
    c = np.zeros(g.shape, complex)
    c[3, 0] = 1.0
    f = SpectralScalar(g, c)
    w = FieldWithTimeDeriv(f, f * (1j * 3.0))
    for a, b in [(0, 1), (0, 2), (1, 2)]:
        assert null_form(a, b, w, w).norm() < 1e-15


@settings(max_examples=15, deadline=None)
@given(n=st.integers(2, 3), seed=st.integers(0, 2**32 - 1))
def test_helmholtz_parts(n, seed):
    g = TorusGrid(n, 16 if n == 2 else 8)
    rng = np.random.default_rng(seed)
    a = [random_field(g, rng) for _ in range(n)]
    s = helmholtz_split(a)
    div = sum((derivative(s.df[k], k) for k in range(n)), SpectralScalar.zeros(g))
    assert div.norm() < 1e-13
    for j in range(n):
        for k in range(n):
            curl = derivative(s.cf[k], j) - derivative(s.cf[j], k)
            assert curl.norm() < 1e-13
        mean = np.zeros(g.shape, complex)
        mean[g.zero_mode] = s.mean[j]
        back = s.df[j] + s.cf[j] + SpectralScalar(g, mean, True)
        assert (back - a[j]).norm() < 1e-13


def test_helmholtz_rejects_wrong_length():
    g = TorusGrid(2, 8)
    with pytest.raises(ValueError):
        helmholtz_split([SpectralScalar.zeros(g)])


@pytest.mark.parametrize("n,N", [(2, 32), (3, 16), (4, 8)])
def test_interaction_identity_under_lorenz(n, N):
    st_ = random_state(TorusGrid(n, N), np.random.default_rng(n), lorenz=True)
    split = decompose_interaction(st_)
    assert split.lorenz_residual < 1e-14
    assert (split.p1 + split.p2 - split.direct).norm() <= 1e-12 * split.direct.norm()


def test_interaction_identity_fails_without_lorenz():
    st_ = random_state(TorusGrid(2, 32), np.random.default_rng(3))
    split = decompose_interaction(st_)
    assert split.lorenz_residual > 0.1
    assert (split.p1 + split.p2 - split.direct).norm() > 1e-3 * split.direct.norm()


def test_bessel_smoothing_breaks_the_identity():
    # with <D>^{-1} in place of D^{-1} the P2 term misses O(|xi|^-2)
    g = TorusGrid(2, 32)
    st_ = random_state(g, np.random.default_rng(4), lorenz=True)
    ref = decompose_interaction(st_)
    zero = SpectralScalar.zeros(g)
    phi = FieldWithTimeDeriv(st_.phi, st_.phi_t)
    R = lambda f, k: apply_multiplier(f, MultiplierSymbol.riesz(k))  # noqa: E731
    lam = lambda f: apply_multiplier(f, MultiplierSymbol.bessel(-1.0))  # noqa: E731
    p2 = SpectralScalar.zeros(g, is_real=False)
    for j in (1, 2):
        for k in (1, 2):
            if j != k:
                b = lam(R(st_.a[k], j - 1) - R(st_.a[j], k - 1))
                p2 = p2 - 0.5 * null_form(j, k, FieldWithTimeDeriv(b, zero), phi)
    assert (p2 - ref.p2).norm() > 1e-4 * ref.p2.norm()


def test_lorenz_field_definition():
    st_ = random_state(TorusGrid(2, 16), np.random.default_rng(5))
    u = lorenz_field(st_)
    ref = -st_.a_t[0] + derivative(st_.a[1], 0) + derivative(st_.a[2], 1)
    assert (u - ref).norm() == 0.0
