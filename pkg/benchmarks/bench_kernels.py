"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs on the same inputs under both backends; the table shows the
best-of-``repeat`` wall time, the speedup and the max deviation between the
two outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from mkglab import _pykernels

try:
    from mkglab import _ckernels
except ImportError:
    _ckernels = None


def _cases(rng):
    M = 64 * 64
    B = 7
    cplx = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)  # noqa: E731
    real = lambda *s: rng.standard_normal(s)  # noqa: E731

    f, v = cplx(B, M), cplx(B, M)
    c, s, ws = real(M), real(M), real(M)

    def propagate(mod):
        ff, vv = f.copy(), v.copy()
        mod.propagate(ff, vv, c, s, ws)
        return np.concatenate([ff, vv])

    phi, dphi, a = cplx(M), cplx(3, M), real(3, M)

    def current(mod):
        out = np.empty((3, M))
        mod.current(phi, dphi, a, out)
        return out

    phi_t, grad, g, adf = cplx(M), cplx(2, M), real(2, M), real(2, M)

    def mtilde(mod):
        out = np.empty(M, dtype=np.complex128)
        mod.mtilde(phi, phi_t, grad, a, g, adf, 1.0, out)
        return out

    nt, ku, kv = 72, 120, 120
    U, V = cplx(nt, ku), cplx(nt, kv)
    index = np.ascontiguousarray(rng.integers(0, 900, size=(ku, kv)).astype(np.int64))

    def pair_product(mod):
        return mod.pair_product(U, V, index, 900)

    coeffs = cplx(136, 4096)
    tau = np.abs(real(136))
    xi = np.abs(real(4096))
    w2 = np.abs(real(4096))

    def hsb_sumsq(mod):
        return np.array([mod.hsb_sumsq(coeffs, tau, xi, w2, 0.55)])

    return {
        "propagate": propagate,
        "current": current,
        "mtilde": mtilde,
        "pair_product": pair_product,
        "hsb_sumsq": hsb_sumsq,
    }


def run(repeat: int = 5) -> list[dict]:
    rng = np.random.default_rng(0)
    rows = []
    for name, fn in _cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=repeat))
        row = {"kernel": name, "python_s": t_py, "cython_s": None, "speedup": None, "max_dev": None}
        if _ckernels is not None:
            t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=repeat))
            ref = fn(_pykernels)
            dev = float(np.max(np.abs(fn(_ckernels) - ref)) / max(1.0, np.max(np.abs(ref))))
            row.update(cython_s=t_c, speedup=t_py / t_c, max_dev=dev)
        rows.append(row)
    return rows


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json")
    args = p.parse_args(argv)
    rows = run(args.repeat)
    if _ckernels is None:
        print("compiled core not built; timing the numpy fallback only")
    print(f"{'kernel':<14s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s} {'max dev':>10s}")
    for r in rows:
        cy = f"{r['cython_s'] * 1e3:10.3f}" if r["cython_s"] is not None else f"{'-':>10s}"
        sp = f"{r['speedup']:8.2f}" if r["speedup"] is not None else f"{'-':>8s}"
        dv = f"{r['max_dev']:10.2e}" if r["max_dev"] is not None else f"{'-':>10s}"
        print(f"{r['kernel']:<14s} {r['python_s'] * 1e3:10.3f} {cy} {sp} {dv}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
