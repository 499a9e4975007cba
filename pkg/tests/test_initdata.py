import numpy as np
import pytest

from mkglab.fields import Faraday
from mkglab.grid import SpectralScalar, TorusGrid, derivative
from mkglab.initdata import (
    ConstraintError,
    build_data,
    charge_density,
    curl_seed,
    inject_divergence,
    load_data,
    save_data,
    verify_constraints,
)
from mkglab.sampling import random_field

KEYS = {"eq10_temporal", "eq12_divergence", "eq13_curl", "eq14_velocity", "eq15_gauss", "lorenz_u0", "lorenz_ut0"}


def data_for(n, N, seed, **kw):
    g = TorusGrid(n, N)
    rng = np.random.default_rng(seed)
    phi0 = random_field(g, rng, real=False, width=2.0)
    phi1 = random_field(g, rng, real=False, width=2.0)
    return build_data(phi0, phi1, None if n == 1 else seed, **kw)


@pytest.mark.parametrize("n,N", [(1, 32), (2, 32), (3, 16), (4, 8)])
def test_residuals_vanish(n, N):
    d = data_for(n, N, 0)
    assert set(d.residuals) == KEYS
    assert max(d.residuals.values()) < 1e-13


def test_plane_wave_charge_is_dropped():
    # phi0 = e^{ix}, phi1 = i e^{ix}: rho = Im(phi0 conj phi1) = -1, pure mean
    g = TorusGrid(1, 16)
    x = g.points()[0]
    phi0 = SpectralScalar.from_physical(g, np.exp(1j * x))
    phi1 = SpectralScalar.from_physical(g, 1j * np.exp(1j * x))
    d = build_data(phi0, phi1)
    assert d.dropped_charge == pytest.approx(-1.0, abs=1e-14)
    assert d.F0.norm() < 1e-14


def test_bad_seed_two_form_is_refused():
    g = TorusGrid(3, 8)
    f = random_field(g, np.random.default_rng(0))
    bad = Faraday(g, {(1, 2): f})
    z = SpectralScalar.zeros(g, is_real=False)
    with pytest.raises(ConstraintError, match="Bianchi"):
        build_data(z, z, bad)


def test_given_curl_is_reproduced():
    g = TorusGrid(2, 16)
    rng = np.random.default_rng(1)
    F = curl_seed(g, 3, width=2.0)
    phi = random_field(g, rng, real=False)
    d = build_data(phi, phi, F)
    assert (d.F0[1, 2] - F[1, 2]).norm() < 1e-13
    assert (derivative(d.a0[2], 0) - derivative(d.a0[1], 1) - F[1, 2]).norm() < 1e-13


def test_divergence_free_addition_keeps_constraints():
    d = data_for(3, 16, 2, divfree_seed=5)
    assert max(d.residuals.values()) < 1e-13


def test_grid_mismatch():
    a = SpectralScalar.zeros(TorusGrid(1, 8), is_real=False)
    b = SpectralScalar.zeros(TorusGrid(1, 16), is_real=False)
    with pytest.raises(ValueError):
        build_data(a, b)


def test_injected_divergence_breaks_only_gauss():
    d = inject_divergence(data_for(2, 32, 3), size=1.0)
    r = d.residuals
    assert r["eq15_gauss"] == pytest.approx(1.0, rel=1e-12)
    assert r["eq14_velocity"] < 1e-13 and r["eq12_divergence"] < 1e-13


def test_charge_density_is_real_and_dealiased():
    g = TorusGrid(2, 16)
    rng = np.random.default_rng(4)
    rho = charge_density(random_field(g, rng, real=False), random_field(g, rng, real=False))
    assert rho.is_real and np.all(rho.coeffs[~g.dealias_mask] == 0)


def test_save_load_round_trip(tmp_path):
    d = data_for(2, 16, 6, m=0.5)
    save_data(d, tmp_path / "init")
    back = load_data(tmp_path / "init")
    assert back.m == 0.5 and back.dropped_charge == d.dropped_charge
    assert (back.F0 - d.F0).norm() < 1e-14
    assert max(back.residuals.values()) < 1e-13
    assert verify_constraints(back) == back.residuals
