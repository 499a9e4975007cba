"""Acceptance criteria 1-9.  Each test records one PASS/FAIL line, printed
in the terminal summary."""

import math
import time

import numpy as np
import pytest

import oracles
from mkglab.cli import PROBE_PRESETS
from mkglab.diagnostics import charge, faraday_gap, gauge_residual
from mkglab.dynamics import Scheme, SchemeSpec, current, evolve, rhs_M, rhs_Mtilde, rhs_N
from mkglab.estlab import Ensemble, ProbeConfig, probe
from mkglab.fields import sobolev_norm
from mkglab.grid import MultiplierSymbol, SpectralScalar, TorusGrid, apply_multiplier, dealias, derivative, inv_laplacian, laplacian
from mkglab.initdata import build_data, curl_seed, inject_divergence
from mkglab.nullforms import FieldWithTimeDeriv, decompose_interaction, interaction_direct, null_form
from mkglab.sampling import random_field, random_state


# -- 1 ----------------------------------------------------------------------


def test_c1_null_structure_identity(criterion):
    worst, slowest = 0.0, 0.0
    for n, N in [(2, 64), (3, 32), (4, 8)]:
        st = random_state(TorusGrid(n, N), np.random.default_rng(100 + n), width=max(1.0, N / 12), lorenz=True)
        t0 = time.perf_counter()
        split = decompose_interaction(st)
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, (split.p1 + split.p2 - split.direct).norm() / split.direct.norm())
    ok = worst <= 1e-10 and slowest <= 10.0
    criterion(1, ok, f"max rel residual {worst:.2e} (<= 1e-10), slowest case {slowest:.2f}s (<= 10s)")
    assert ok


# -- 2 ----------------------------------------------------------------------


def test_c2_constraint_construction(criterion):
    worst = 0.0
    for n, N in [(1, 32), (2, 32), (3, 16), (4, 8)]:
        g = TorusGrid(n, N)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            kw = dict(real=False, width=max(1.0, N / 12))
            d = build_data(random_field(g, rng, **kw), random_field(g, rng, **kw), None if n == 1 else seed)
            worst = max(worst, max(d.residuals.values()))
    ok = worst <= 1e-12
    criterion(2, ok, f"max residual over 80 data sets {worst:.2e} (<= 1e-12)")
    assert ok


# -- 3, 4, 7 ----------------------------------------------------------------


def _compatible_n2():
    g = TorusGrid(2, 64)
    rng = np.random.default_rng(0)
    kw = dict(real=False, width=1.0, amplitude=1.0)
    return build_data(random_field(g, rng, **kw), random_field(g, rng, **kw),
                      curl_seed(g, 1, width=1.0, amplitude=1.0), m=8.0)


OBS = {
    "gauge": lambda s, c: gauge_residual(s)[1],
    "charge": lambda s, c: charge(s),
    "fgap": lambda s, c: math.nan if c.faraday is None else faraday_gap(c.faraday, s),
}


@pytest.fixture(scope="module")
def runs():
    data = _compatible_n2()
    out = {}
    for dt in (1e-3, 5e-4):
        out[dt] = evolve(data, 1.0, SchemeSpec(Scheme.RK4, dt), OBS, cadence=10, faraday=True)
    out["inject"] = evolve(inject_divergence(data, size=1.0), 1.0, SchemeSpec(Scheme.RK4, 1e-3), OBS, cadence=10)
    out["flip"] = evolve(data, 1.0, SchemeSpec(Scheme.RK4, 1e-3), OBS, cadence=10, faraday=True, flip_q0=True)
    return out


def test_c3_gauge_propagation(runs, criterion):
    g1, g2 = (float(np.max(runs[dt].column("gauge"))) for dt in (1e-3, 5e-4))
    neg = float(runs["inject"].column("gauge")[-1])
    ok = g1 <= 1e-6 and g1 / g2 >= 4.0 and neg >= 0.1
    criterion(3, ok, f"sup gauge {g1:.2e} (<= 1e-6), shrink {g1 / g2:.1f}x at dt/2 (>= 4), "
                     f"injected divergence {neg:.3f} at T=1 (>= 0.1)")
    assert ok


def test_c4_faraday_equivalence(runs, criterion):
    f1, f2 = (float(np.max(runs[dt].column("fgap"))) for dt in (1e-3, 5e-4))
    neg = float(runs["flip"].column("fgap")[-1])
    ok = f1 <= 1e-6 and f1 / f2 >= 4.0 and neg >= 0.1
    criterion(4, ok, f"sup gap {f1:.2e} (<= 1e-6), shrink {f1 / f2:.1f}x at dt/2 (>= 4), flipped source {neg:.3f} (>= 0.1)")
    assert ok


def test_c7_charge_conservation(runs, criterion):
    q = runs[1e-3].column("charge")
    drift = abs(q[-1] - q[0])
    ok = drift <= 1e-8
    criterion(7, ok, f"|charge(T) - charge(0)| = {drift:.2e} (<= 1e-8)")
    assert ok


# -- 5 ----------------------------------------------------------------------


def test_c5_formulation_equivalence(criterion):
    mm, nj = 0.0, 0.0
    for n, N in [(1, 32), (2, 32), (3, 16), (4, 8)]:
        g = TorusGrid(n, N)
        for seed in range(5):
            rng = np.random.default_rng(seed)
            lor = random_state(g, rng, width=max(1.0, N / 12), lorenz=True)
            M = rhs_M(lor)
            mm = max(mm, (M - rhs_Mtilde(lor)).norm() / M.norm())
            st = random_state(g, rng, width=max(1.0, N / 12))
            nj = max(nj, max((a + b).norm() for a, b in zip(rhs_N(st), current(st))))
    ok = mm <= 1e-10 and nj <= 1e-12
    criterion(5, ok, f"||M - M~||/||M|| {mm:.2e} (<= 1e-10), ||N + j|| {nj:.2e} (<= 1e-12)")
    assert ok


# -- 6 ----------------------------------------------------------------------


def _self_convergence(kind):
    g = TorusGrid(2, 32)
    rng = np.random.default_rng(3)
    kw = dict(real=False, width=2.0, amplitude=1.0)
    data = build_data(random_field(g, rng, **kw), random_field(g, rng, **kw), 3)
    finals = []
    for dt in (0.05, 0.025, 0.0125, 0.00625):
        y, v = evolve(data, 0.5, SchemeSpec(kind, dt), observers={}).final.pack()
        finals.append(np.concatenate([y.ravel(), v.ravel()]))
    errs = [np.linalg.norm(a - b) for a, b in zip(finals, finals[1:])]
    return [math.log2(a / b) for a, b in zip(errs, errs[1:])]


def test_c6_integrator_orders(criterion):
    sg = _self_convergence(Scheme.GAUTSCHI)
    sr = _self_convergence(Scheme.RK4)
    ok = min(sg) >= 1.9 and min(sr) >= 3.9
    criterion(6, ok, f"Gautschi slopes {', '.join(f'{s:.3f}' for s in sg)} (>= 1.9); "
                     f"RK4 slopes {', '.join(f'{s:.3f}' for s in sr)} (>= 3.9)")
    assert ok


# -- 8 ----------------------------------------------------------------------


def _preset(name, trials=50):
    p = dict(PROBE_PRESETS[name])
    return ProbeConfig(p["estimate"], p["params"], Ensemble(**p["ensemble"]), trials, p.get("resolutions", [8, 16, 32]))


def test_c8_estimate_probes(criterion):
    t0 = time.perf_counter()
    reps = {name: probe(_preset(name)) for name in
            ("prop36-admissible", "prop36-admissible-knapp", "prop36-violated", "nullgain-parallel", "nullgain-random")}
    total = time.perf_counter() - t0
    par = max(max(v) for v in reps["nullgain-parallel"].ratios.values())
    checks = {
        "admissible/random bounded": reps["prop36-admissible"].verdict == "bounded",
        "admissible/knapp bounded": reps["prop36-admissible-knapp"].verdict == "bounded",
        "violated/knapp growing": reps["prop36-violated"].verdict == "growing",
        "parallel null ratio <= 1e-10": par <= 1e-10,
        "null random bounded": reps["nullgain-random"].verdict == "bounded",
        "runtime <= 600s": total <= 600.0,
    }
    slopes = ", ".join(f"{k} {r.slope:+.3f}/{r.verdict}" for k, r in reps.items() if k != "nullgain-parallel")
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    criterion(8, ok, f"{slopes}; parallel max {par:.1e}; {total:.0f}s" + (f"; failed: {failed}" if failed else ""))
    assert ok, failed


# -- 9 ----------------------------------------------------------------------


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))


def test_c9_oracle_equivalence(criterion):
    worst = {}

    def note(name, val):
        worst[name] = max(worst.get(name, 0.0), val)

    for n in (1, 2, 3, 4):
        g = TorusGrid(n, 8)
        rng = np.random.default_rng(n)
        v = rng.standard_normal(g.shape)
        f = SpectralScalar.from_physical(g, v)
        note("transform", _rel(f.coeffs, oracles.dft(v)))
        x2 = lambda xi: sum(k * k for k in xi)  # noqa: E731
        for k in range(n):
            note("derivative", _rel(derivative(f, k).to_physical(), oracles.apply_symbol(v, lambda xi, k=k: 1j * xi[k]).real))
            ref = oracles.apply_symbol(v, lambda xi, k=k: 0 if not any(xi) else 1j * xi[k] / math.sqrt(x2(xi))).real
            note("riesz", _rel(apply_multiplier(f, MultiplierSymbol.riesz(k)).to_physical(), ref))
        note("laplacian", _rel(laplacian(f).to_physical(), oracles.apply_symbol(v, lambda xi: -x2(xi)).real))
        note("inv_laplacian", _rel(inv_laplacian(f).to_physical(),
                                   oracles.apply_symbol(v, lambda xi: 0 if not any(xi) else -1 / x2(xi)).real))
        for a in (-1.0, 0.5):
            note("bessel", _rel(apply_multiplier(f, MultiplierSymbol.bessel(a)).to_physical(),
                                oracles.apply_symbol(v, lambda xi: (1 + x2(xi)) ** (a / 2)).real))
            vm = v - v.mean()
            fm = SpectralScalar.from_physical(g, vm)
            note("fractional", _rel(apply_multiplier(fm, MultiplierSymbol.fractional(a)).to_physical(),
                                    oracles.apply_symbol(vm, lambda xi: 0 if not any(xi) else math.sqrt(x2(xi)) ** a).real))
        note("dealias", _rel(dealias(f).coeffs, oracles.dft(v) * oracles.dealias_table(n, 8)))
        note("L2 norm", abs(f.norm() - oracles.l2(v)) / oracles.l2(v))
        note("Sobolev norm", abs(sobolev_norm(f, 0.7) - oracles.sobolev(oracles.dft(v), 0.7)) / sobolev_norm(f, 0.7))

        st = random_state(g, rng, width=1.5, m=0.7)
        for mu, (j, r) in enumerate(zip(current(st), oracles.current(st))):
            note("current", _rel(j.coeffs, r))
        note("M", _rel(rhs_M(st).coeffs, oracles.rhs_M(st)))
        note("M~", _rel(rhs_Mtilde(st).coeffs, oracles.rhs_Mtilde(st)))
        phi, phi_t, aa, _, grad = oracles.state_points(st)
        vals = -aa[0] * phi_t + sum(aa[j + 1] * grad[j] for j in range(n))
        note("A^mu d_mu phi", _rel(interaction_direct(st).coeffs, oracles.project(vals)))
        w = FieldWithTimeDeriv(st.phi, st.phi_t)
        u = FieldWithTimeDeriv(st.a[1], st.a_t[1])
        for b in range(1, n + 1):
            ref = oracles.null_form(0, b, oracles.idft(st.a[1].coeffs), oracles.idft(st.a_t[1].coeffs), phi, phi_t)
            note("null forms", _rel(null_form(0, b, u, w).coeffs, ref))
    bad = {k: v for k, v in worst.items() if v > 1e-12}
    ok = not bad
    criterion(9, ok, f"{len(worst)} operators x n=1..4 on N=8, max deviation {max(worst.values()):.2e} (<= 1e-12)"
              + (f"; failed: {sorted(bad)}" if bad else ""))
    assert ok, bad
