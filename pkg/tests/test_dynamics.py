import math

import numpy as np
import pytest

from mkglab.dynamics import (
    BlowUpError,
    RightHandSide,
    Scheme,
    SchemeSpec,
    current,
    evolve,
    faraday_sources,
    rhs_M,
    rhs_Mtilde,
    rhs_N,
    step,
    write_series_csv,
)
from mkglab.fields import MKGState
from mkglab.grid import SpectralScalar, TorusGrid
from mkglab.initdata import build_data
from mkglab.sampling import random_field, random_state

SCHEMES = [Scheme.RK4, Scheme.GAUTSCHI]


def standing_wave(g, k, m, amp=0.5):
    """phi = amp cos(w t) cos(k x), A = 0: an exact solution (j vanishes)."""
    x = g.points()[0]
    phi = SpectralScalar.from_physical(g, amp * np.cos(k * x) + 0j)
    z = SpectralScalar.zeros(g)
    return MKGState(0.0, phi, SpectralScalar.zeros(g, is_real=False), (z,) * (g.n + 1), (z,) * (g.n + 1), m)


def test_scheme_validation():
    with pytest.raises(ValueError, match="dt"):
        SchemeSpec(Scheme.RK4, 0.0)
    with pytest.raises(ValueError, match="dt"):
        SchemeSpec(Scheme.RK4, math.nan)
    with pytest.raises(ValueError):
        SchemeSpec("leapfrog", 0.1)
    assert SchemeSpec("gautschi", 0.1).kind is Scheme.GAUTSCHI


@pytest.mark.parametrize("kind", SCHEMES)
def test_zero_data_stays_zero(kind):
    st = MKGState.zeros(TorusGrid(2, 16))
    evo = evolve(st, 0.2, SchemeSpec(kind, 0.05))
    y, v = evo.final.pack()
    assert np.all(y == 0) and np.all(v == 0)


@pytest.mark.parametrize("kind", SCHEMES)
def test_klein_gordon_standing_wave(kind):
    g = TorusGrid(2, 16)
    k, m, T = 3, 2.0, 1.0
    st = standing_wave(g, k, m)
    evo = evolve(st, T, SchemeSpec(kind, 1e-3), observers={})
    w = math.sqrt(k * k + m * m)
    x = g.points()[0]
    exact = 0.5 * math.cos(w * T) * np.cos(k * x)
    tol = 1e-9 if kind is Scheme.RK4 else 1e-5
    assert np.max(np.abs(evo.final.phi.to_physical() - exact)) < tol
    assert max(f.norm() for f in evo.final.a) < 1e-14


@pytest.mark.parametrize("kind", SCHEMES)
def test_free_flow_is_exact(kind):
    g = TorusGrid(1, 16)
    st = random_state(g, np.random.default_rng(0), width=2.0)
    out = step(st, SchemeSpec(kind, 0.7), nonlinear=False)
    # massless wave flow per mode (the mass term belongs to the nonlinearity)
    w = g.xi_abs
    c = np.cos(0.7 * w)
    s = np.where(w > 0, np.sin(0.7 * w) / np.where(w > 0, w, 1.0), 0.7)
    np.testing.assert_allclose(out.phi.coeffs, c * st.phi.coeffs + s * st.phi_t.coeffs, atol=1e-14)


def test_backward_step_returns():
    g = TorusGrid(2, 16)
    st = random_state(g, np.random.default_rng(1), width=2.0, amplitude=0.5)
    fwd = step(st, SchemeSpec(Scheme.RK4, 1e-2))
    back = step(fwd, SchemeSpec(Scheme.RK4, -1e-2))
    assert (back.phi - st.phi).norm() < 1e-9
    assert back.t == pytest.approx(0.0, abs=1e-15)


def test_packed_rhs_matches_reference():
    g = TorusGrid(2, 16)
    st = random_state(g, np.random.default_rng(2), width=2.0)
    rhs = RightHandSide(g, st.m, True, faraday=True)
    y, v = st.pack()
    from mkglab.dynamics import _pack_faraday
    from mkglab.fields import faraday_from_potential

    F = faraday_from_potential(st)
    acc = rhs(np.concatenate([y, _pack_faraday(F)]), np.concatenate([v, _pack_faraday(F)]))
    j = current(st)
    np.testing.assert_allclose(acc[0], -rhs_Mtilde(st).coeffs, atol=1e-14)
    for mu in range(1, g.n + 1):
        np.testing.assert_allclose(acc[1 + mu], j[mu].coeffs, atol=1e-14)
    j0 = j[0].coeffs.copy()
    j0[g.zero_mode] = 0
    np.testing.assert_allclose(acc[1], j0, atol=1e-14)
    S = faraday_sources(st)
    for i, (key, comp) in enumerate(S.components()):
        np.testing.assert_allclose(acc[g.n + 2 + i], -comp.coeffs, atol=1e-14)


def test_M_Mtilde_and_N_identities():
    g = TorusGrid(3, 16)
    rng = np.random.default_rng(3)
    lor = random_state(g, rng, width=2.0, lorenz=True)
    assert (rhs_M(lor) - rhs_Mtilde(lor)).norm() <= 1e-13 * rhs_M(lor).norm()
    st = random_state(g, rng, width=2.0)
    assert (rhs_M(st) - rhs_Mtilde(st)).norm() > 1e-3 * rhs_M(st).norm()
    for a, b in zip(rhs_N(st), current(st)):
        assert (a + b).norm() == 0.0


def test_cadence_and_final_time():
    st = MKGState.zeros(TorusGrid(1, 8))
    evo = evolve(st, 1.0, SchemeSpec(Scheme.RK4, 0.3), cadence=2)
    # dt is adjusted to T / round(T / dt) = 1/3
    assert evo.times == pytest.approx([0.0, 2 / 3, 1.0])
    assert set(evo.series) >= {"gauge_residual_L2", "charge"}
    with pytest.raises(ValueError):
        evolve(st, -1.0, SchemeSpec())
    with pytest.raises(ValueError):
        evolve(st, 1.0, SchemeSpec(Scheme.RK4, -0.1))


def test_blow_up_carries_partial_series():
    g = TorusGrid(2, 16)
    rng = np.random.default_rng(4)
    phi = random_field(g, rng, real=False, amplitude=300.0)
    data = build_data(phi, phi * 0.0)
    with pytest.raises(BlowUpError) as info:
        evolve(data, 5.0, SchemeSpec(Scheme.RK4, 0.05), cadence=1)
    err = info.value
    assert len(err.series.times) >= 1 and err.state is not None
    assert err.t > 0


def test_csv_is_deterministic(tmp_path):
    g = TorusGrid(2, 16)
    rng = np.random.default_rng(5)
    data = build_data(random_field(g, rng, real=False), random_field(g, rng, real=False), 1)
    paths = []
    for i in range(2):
        evo = evolve(data, 0.1, SchemeSpec(Scheme.GAUTSCHI, 0.02), faraday=True)
        paths.append(tmp_path / f"s{i}.csv")
        write_series_csv(evo, paths[-1])
    assert paths[0].read_bytes() == paths[1].read_bytes()
    header, first = paths[0].read_text().splitlines()[:2]
    assert header.startswith("time,gauge_residual_L2")
    assert first.split(",")[0] == "0"


def test_snapshots_written(tmp_path):
    st = MKGState.zeros(TorusGrid(1, 8))
    evo = evolve(st, 0.4, SchemeSpec(Scheme.RK4, 0.1), snapshot_every=2, snapshot_dir=tmp_path)
    assert len(evo.snapshots) == 3 and all(p.endswith(".mkgs") for p in evo.snapshots)
