import io

import numpy as np
import pytest

from mkglab.fields import (
    Faraday,
    MKGState,
    SobolevExponents,
    faraday_from_potential,
    load_snapshot,
    save_snapshot,
    sobolev_norm,
)
from mkglab.grid import SpectralScalar, TorusGrid
from mkglab.sampling import random_state


def test_state_validation():
    g = TorusGrid(2, 8)
    z = SpectralScalar.zeros(g)
    with pytest.raises(ValueError, match="n\\+1"):
        MKGState(0.0, z, z, (z, z), (z, z, z))
    zc = SpectralScalar.zeros(g, is_real=False)
    with pytest.raises(ValueError, match="real"):
        MKGState(0.0, z, z, (zc, z, z), (z, z, z))
    with pytest.raises(ValueError, match="mass"):
        MKGState(0.0, z, z, (z,) * 3, (z,) * 3, -1.0)


def test_pack_round_trip():
    st = random_state(TorusGrid(3, 8), np.random.default_rng(0))
    y, v = st.pack()
    back = MKGState.from_packed(st.grid, y, v, 0.0, st.m)
    assert np.array_equal(back.pack()[0], y) and np.array_equal(back.pack()[1], v)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_snapshot_round_trip(n, tmp_path):
    st = random_state(TorusGrid(n, 8), np.random.default_rng(n), m=0.3)
    p = tmp_path / "s.mkgs"
    save_snapshot(st, p)
    back = load_snapshot(p)
    assert back.t == st.t and back.m == st.m
    for a, b in zip(st.pack(), back.pack()):
        assert np.array_equal(a, b)


def test_snapshot_rejects_garbage():
    with pytest.raises(ValueError, match="magic"):
        load_snapshot(io.BytesIO(b"XXXX" + bytes(40)))
    buf = io.BytesIO()
    save_snapshot(MKGState.zeros(TorusGrid(1, 8)), buf)
    with pytest.raises(ValueError, match="size"):
        load_snapshot(io.BytesIO(buf.getvalue()[:-8]))


def test_faraday_antisymmetry_and_bianchi():
    st = random_state(TorusGrid(3, 8), np.random.default_rng(1))
    F = faraday_from_potential(st)
    assert (F[1, 2] + F[2, 1]).norm() == 0.0
    assert F[2, 2].norm() == 0.0
    assert F.bianchi_residual() < 1e-13
    with pytest.raises(ValueError):
        Faraday(st.grid, {(2, 1): F[1, 2]})


def test_sobolev_monotone_in_s():
    st = random_state(TorusGrid(2, 16), np.random.default_rng(2))
    vals = [sobolev_norm(st.phi, s) for s in (-1, 0, 0.5, 1, 2)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_exponent_admissibility():
    ok = SobolevExponents(1.6, 1.6)
    assert ok.admissible(4)
    bad = SobolevExponents(1.0, 1.0).violations(4)
    assert any("5/6" in b for b in bad)
    assert "n >= 4" in SobolevExponents(5, 5).violations(3)
    with pytest.raises(ValueError):
        SobolevExponents(1, 1, epsilon=0.0)
