"""Command-line entry point: ``mkglab run | check-identities | probe | info``.

Exit codes: 0 success, 1 configuration error, 2 blow-up (partial outputs
written), 3 identity failure, 4 growth detected for admissible exponents.

Run configuration (JSON; every field optional, flags override)::

    {
      "grid":        {"n": 2, "N": 32, "dealias_fraction": 0.3333333333333333},
      "time":        {"T": 1.0, "dt": 0.01, "scheme": "rk4"},
      "mass":        1.0,
      "data":        {"source": "random", "seed": 0, "width": 2.0, "amplitude": 1.0,
                      "curl": true, "curl_width": 2.0, "curl_amplitude": 1.0},
      "exponents":   {"s": null, "r": null, "epsilon": 0.05},
      "diagnostics": {"cadence": 10, "faraday": true, "snapshot_every": null},
      "output":      {"dir": "mkg_out"}
    }

``data.source`` is ``random``, ``snapshot`` (with ``data.path``) or
``preset`` (with ``data.name``).  Null exponents default to
s = r = (n-1)/2 + 1/10.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .diagnostics import standard_observers
from .dynamics import (
    BlowUpError,
    Scheme,
    SchemeSpec,
    current,
    evolve,
    faraday_sources,
    rhs_M,
    rhs_Mtilde,
    rhs_N,
    write_series_csv,
    write_series_json,
)
from .estlab import ESTIMATES, Ensemble, ProbeConfig, probe
from .fields import SobolevExponents, faraday_from_potential
from .grid import SpectralScalar, TorusGrid, derivative, fft_workers
from .initdata import build_data, curl_seed, load_data
from .nullforms import decompose_interaction, helmholtz_split
from .sampling import random_field, random_state

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IDENTITY, EXIT_GROWTH = 0, 1, 2, 3, 4
IDENTITY_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


DEFAULT_CONFIG = {
    "grid": {"n": 2, "N": 32, "dealias_fraction": 1.0 / 3.0},
    "time": {"T": 1.0, "dt": 0.01, "scheme": "rk4"},
    "mass": 1.0,
    "data": {
        "source": "random",
        "seed": 0,
        "width": 2.0,
        "amplitude": 1.0,
        "curl": True,
        "curl_width": 2.0,
        "curl_amplitude": 1.0,
    },
    "exponents": {"s": None, "r": None, "epsilon": 0.05},
    "diagnostics": {"cadence": 10, "faraday": True, "snapshot_every": None},
    "output": {"dir": "mkg_out"},
}

RUN_PRESETS = {
    "zero": {
        "grid": {"n": 2, "N": 16},
        "time": {"T": 0.1, "dt": 0.01},
        "data": {"source": "preset", "name": "zero"},
    },
    "smalldata-n2": {
        "grid": {"n": 2, "N": 32},
        "time": {"T": 1.0, "dt": 0.01, "scheme": "rk4"},
        "data": {"source": "random", "seed": 0, "width": 2.0, "amplitude": 1e-3,
                 "curl": True, "curl_width": 2.0, "curl_amplitude": 1e-3},
    },
}

_CAP = {"kind": "knapp", "thickness": 0.5, "thickness_power": 1.0}
PROBE_PRESETS = {
    "prop36-admissible": dict(estimate="prop36", params={"s0": 0.0, "s1": 0.8, "s2": 0.8}, ensemble={"kind": "random_free"}),
    "prop36-admissible-knapp": dict(estimate="prop36", params={"s0": 0.0, "s1": 0.8, "s2": 0.8}, ensemble=_CAP),
    "prop36-violated": dict(estimate="prop36", params={"s0": 0.3, "s1": 0.3, "s2": 0.3}, ensemble=_CAP),
    "nullgain-parallel": dict(estimate="nullgain", params={"eps": 0.05}, ensemble={"kind": "knapp", "thickness": 0.0}),
    "nullgain-random": dict(
        estimate="nullgain", params={"eps": 0.05}, ensemble={"kind": "random_free"}, resolutions=[16, 32, 64]
    ),
}


# ---------------------------------------------------------------------------
# configuration


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(dotted, "unknown section")
        node = node[k]
    node[keys[-1]] = value


def _number(cfg: dict, path: str, *, kind=float, positive=False, allow_none=False):
    node = cfg
    for k in path.split("."):
        node = node.get(k) if isinstance(node, dict) else None
    if node is None and allow_none:
        return None
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(path, f"expected a number, got {node!r}")
    if kind is int and (not float(node).is_integer()):
        raise ConfigError(path, f"expected an integer, got {node!r}")
    val = kind(node)
    if not math.isfinite(val):
        raise ConfigError(path, "must be finite")
    if positive and val <= 0:
        raise ConfigError(path, f"must be positive, got {node!r}")
    return val


def resolve_config(raw: dict) -> dict:
    """Merge with defaults and validate; raises :class:`ConfigError`."""
    unknown = set(raw) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    cfg = _merge(DEFAULT_CONFIG, raw)

    n = _number(cfg, "grid.n", kind=int)
    N = _number(cfg, "grid.N", kind=int)
    if not 1 <= n <= 4:
        raise ConfigError("grid.n", f"must be 1..4, got {n}")
    if N < 4 or N & (N - 1):
        raise ConfigError("grid.N", f"must be a power of two >= 4, got {N}")
    rho = _number(cfg, "grid.dealias_fraction", positive=True)
    try:
        TorusGrid(n, N, rho)
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    cfg["grid"].update(n=n, N=N, dealias_fraction=rho)

    cfg["time"]["T"] = _number(cfg, "time.T", positive=True)
    cfg["time"]["dt"] = _number(cfg, "time.dt", positive=True)
    if cfg["time"]["scheme"] not in [s.value for s in Scheme]:
        raise ConfigError("time.scheme", f"must be one of {[s.value for s in Scheme]}")
    cfg["mass"] = _number(cfg, "mass")

    data = cfg["data"]
    src = data.get("source")
    if src == "random":
        data["seed"] = _number(cfg, "data.seed", kind=int)
        data["width"] = _number(cfg, "data.width", positive=True)
        data["amplitude"] = _number(cfg, "data.amplitude")
        data["curl_width"] = _number(cfg, "data.curl_width", positive=True)
        data["curl_amplitude"] = _number(cfg, "data.curl_amplitude")
        if not isinstance(data.get("curl"), bool):
            raise ConfigError("data.curl", "must be true or false")
    elif src == "snapshot":
        if not isinstance(data.get("path"), str):
            raise ConfigError("data.path", "snapshot source needs a path")
    elif src == "preset":
        if data.get("name") != "zero":
            raise ConfigError("data.name", f"unknown data preset {data.get('name')!r}; known: ['zero']")
    else:
        raise ConfigError("data.source", f"must be random, snapshot or preset, got {src!r}")

    ex = cfg["exponents"]
    default = (n - 1) / 2 + 0.1
    ex["s"] = _number(cfg, "exponents.s", allow_none=True)
    ex["r"] = _number(cfg, "exponents.r", allow_none=True)
    ex["s"] = default if ex["s"] is None else ex["s"]
    ex["r"] = default if ex["r"] is None else ex["r"]
    ex["epsilon"] = _number(cfg, "exponents.epsilon", positive=True)

    d = cfg["diagnostics"]
    d["cadence"] = _number(cfg, "diagnostics.cadence", kind=int, positive=True)
    if not isinstance(d.get("faraday"), bool):
        raise ConfigError("diagnostics.faraday", "must be true or false")
    d["snapshot_every"] = _number(cfg, "diagnostics.snapshot_every", kind=int, positive=True, allow_none=True)
    if not isinstance(cfg["output"].get("dir"), str):
        raise ConfigError("output.dir", "must be a path string")
    return cfg


def _build(cfg: dict):
    g = cfg["grid"]
    grid = TorusGrid(g["n"], g["N"], g["dealias_fraction"])
    data = cfg["data"]
    m = cfg["mass"]
    if data["source"] == "snapshot":
        try:
            loaded = load_data(data["path"])
        except (OSError, ValueError) as exc:
            raise ConfigError("data.path", str(exc)) from None
        if loaded.grid.n != grid.n or loaded.grid.N != grid.N:
            raise ConfigError("data.path", f"snapshot grid (n={loaded.grid.n}, N={loaded.grid.N}) does not match grid")
        return loaded
    if data["source"] == "preset":
        zero = SpectralScalar.zeros(grid, is_real=False)
        return build_data(zero, zero, None, m=m)
    rng = np.random.default_rng(data["seed"])
    kw = dict(real=False, width=data["width"], amplitude=data["amplitude"])
    phi0 = random_field(grid, rng, **kw)
    phi1 = random_field(grid, rng, **kw)
    seed_f = None
    if data["curl"] and grid.n >= 2:
        seed_f = curl_seed(grid, rng, width=data["curl_width"], amplitude=data["curl_amplitude"])
    return build_data(phi0, phi1, seed_f, m=m)


def _manifest(path: Path, command: str, config: dict, extra: dict | None = None) -> None:
    doc = {
        "command": command,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "config": config,
        **(extra or {}),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str))


# ---------------------------------------------------------------------------
# commands


def cmd_run(args) -> int:
    raw: dict = {}
    try:
        if args.preset:
            if args.preset not in RUN_PRESETS:
                raise ConfigError("preset", f"unknown preset {args.preset!r}; known: {sorted(RUN_PRESETS)}")
            raw = copy.deepcopy(RUN_PRESETS[args.preset])
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError("config", str(exc)) from None
            try:
                loaded = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError("config", f"invalid JSON: {exc}") from None
            if not isinstance(loaded, dict):
                raise ConfigError("config", "top level must be an object")
            raw = _merge(raw, loaded)
        raw = _merge(DEFAULT_CONFIG, raw)
        for item in args.set or []:
            if "=" not in item:
                raise ConfigError(item, "overrides take the form section.field=value")
            key, val = item.split("=", 1)
            _set_path(raw, key, _parse_value(val))
        for flag, path in (("N", "grid.N"), ("n", "grid.n"), ("dt", "time.dt"), ("T", "time.T"),
                           ("scheme", "time.scheme"), ("seed", "data.seed"), ("out", "output.dir")):
            val = getattr(args, flag)
            if val is not None:
                _set_path(raw, path, val)
        cfg = resolve_config(raw)

        exps = SobolevExponents(cfg["exponents"]["s"], cfg["exponents"]["r"], cfg["exponents"]["epsilon"])
        bad = exps.violations(cfg["grid"]["n"])
        if bad:
            if args.strict_exponents:
                raise ConfigError("exponents", "well-posedness hypotheses fail: " + "; ".join(bad))
            print("warning: exponents outside the well-posedness range: " + "; ".join(bad), file=sys.stderr)
        data = _build(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    t = cfg["time"]
    d = cfg["diagnostics"]
    scheme = SchemeSpec(Scheme(t["scheme"]), t["dt"])
    status = "completed"
    t0 = time.perf_counter()
    try:
        evo = evolve(
            data,
            t["T"],
            scheme,
            standard_observers(exps),
            cadence=d["cadence"],
            faraday=d["faraday"],
            snapshot_every=d["snapshot_every"],
            snapshot_dir=out / "snapshots" if d["snapshot_every"] else None,
        )
        code = EXIT_OK
    except BlowUpError as exc:
        evo = exc.series
        status = f"blow-up at t={exc.t:.6g} (norm {exc.norm:.3g})"
        code = EXIT_BLOWUP
        print(status, file=sys.stderr)

    write_series_csv(evo, out / "diagnostics.csv")
    write_series_json(evo, out / "diagnostics.json")
    extra = {
        "status": status,
        "runtime_s": time.perf_counter() - t0,
        "constraint_residuals": data.residuals,
        "dropped_charge": data.dropped_charge,
        "exponent_violations": bad,
        "outputs": ["diagnostics.csv", "diagnostics.json"],
        "snapshots": list(evo.snapshots),
    }
    _manifest(out / "manifest.json", "run", cfg, extra)
    if code == EXIT_OK:
        last = {k: v[-1] for k, v in evo.series.items()}
        print(f"run complete: t={evo.times[-1]:.6g}, {len(evo.times)} records -> {out}")
        for k, v in last.items():
            print(f"  {k:<22s} {v:.6e}")
    return code


def identity_suite(n: int, N: int, seed: int) -> list[tuple[str, float]]:
    """Residuals (relative where a scale exists) of the structural identities."""
    grid = TorusGrid(n, N)
    rng = np.random.default_rng(seed)
    width = max(1.0, N / 12)
    rows = []

    lor = random_state(grid, rng, width=width, lorenz=True)
    split = decompose_interaction(lor)
    rel = (split.p1 + split.p2 - split.direct).norm() / max(split.direct.norm(), 1e-300)
    rows.append(("decompose_interaction (P1+P2 = A^mu d_mu phi)", rel))

    mm = rhs_M(lor)
    rows.append(("rhs_Mtilde (M = M~ under Lorenz)", (mm - rhs_Mtilde(lor)).norm() / max(mm.norm(), 1e-300)))

    st = random_state(grid, rng, width=width)
    Nmu, jmu = rhs_N(st), current(st)
    rows.append(("rhs_N (N = -j)", max((a + b).norm() for a, b in zip(Nmu, jmu))))

    hs = helmholtz_split(st.a[1:])
    rec = 0.0
    for k in range(n):
        mean = np.zeros(grid.shape, dtype=np.complex128)
        mean[grid.zero_mode] = hs.mean[k]
        back = hs.df[k] + hs.cf[k] + SpectralScalar(grid, mean, True, check=False)
        rec = max(rec, (back - st.a[k + 1]).norm() / max(st.a[k + 1].norm(), 1e-300))
    div = sum((derivative(hs.df[k], k) for k in range(n)), SpectralScalar.zeros(grid))
    rows.append(("helmholtz_split (recombination)", rec))
    rows.append(("helmholtz_split (div A^df = 0)", div.norm()))

    F = faraday_from_potential(st)
    rows.append(("faraday_from_potential (Bianchi)", F.bianchi_residual() / max(F.norm(), 1.0)))

    S = faraday_sources(st)
    worst = 0.0
    for j in range(1, n + 1):
        for k in range(j + 1, n + 1):
            ref = derivative(jmu[j], k - 1) - derivative(jmu[k], j - 1)
            worst = max(worst, (S[j, k] - ref).norm() / max(ref.norm(), 1.0))
    rows.append(("faraday_sources (S_jk = d_k j_j - d_j j_k)", worst))
    return rows


def cmd_check_identities(args) -> int:
    try:
        rows = identity_suite(args.dim, args.size, args.seed)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    width = max(len(name) for name, _ in rows)
    print(f"identity suite: n={args.dim} N={args.size} seed={args.seed} tol={IDENTITY_TOL:g}")
    failed = None
    for name, val in rows:
        ok = val <= IDENTITY_TOL
        print(f"  {name:<{width}s}  {val:.3e}  {'ok' if ok else 'FAIL'}")
        if not ok and failed is None:
            failed = name
    if failed is not None:
        print(f"identity failed: {failed.split()[0]}", file=sys.stderr)
        return EXIT_IDENTITY
    print("all identities hold")
    return EXIT_OK


def _probe_config(args) -> ProbeConfig:
    base: dict = {}
    if args.preset:
        if args.preset not in PROBE_PRESETS:
            raise ConfigError("preset", f"unknown preset {args.preset!r}; known: {sorted(PROBE_PRESETS)}")
        base = copy.deepcopy(PROBE_PRESETS[args.preset])
    if args.estimate:
        if args.estimate not in ESTIMATES:
            raise ConfigError("estimate", f"unknown estimate {args.estimate!r}; known: {list(ESTIMATES)}")
        if args.estimate != base.get("estimate"):
            base = {"estimate": args.estimate, "params": {}}
    if "estimate" not in base:
        raise ConfigError("estimate", "give --estimate or --preset")
    params = dict(base.get("params", {}))
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"params.{item}", "exponents take the form name=value")
        key, val = item.split("=", 1)
        try:
            params[key] = json.loads(val) if key == "form" else float(val)
        except (ValueError, json.JSONDecodeError):
            raise ConfigError(f"params.{key}", f"malformed value {val!r}") from None
    ens = dict(base.get("ensemble", {}))
    for flag in ("kind", "thickness", "thickness_power", "decay", "modes_per_shell"):
        val = getattr(args, flag)
        if val is not None:
            ens[flag] = val
    resolutions = base.get("resolutions", [8, 16, 32])
    if args.resolutions:
        try:
            resolutions = [int(x) for x in args.resolutions.split(",")]
        except ValueError:
            raise ConfigError("resolutions", f"malformed list {args.resolutions!r}") from None
    try:
        return ProbeConfig(
            base["estimate"],
            params,
            Ensemble(**ens),
            args.trials,
            resolutions,
            args.n,
            args.epsilon,
            args.window,
            args.seed,
        )
    except KeyError as exc:
        raise ConfigError(f"params.{exc.args[0]}", "missing exponent") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError("probe", str(exc)) from None


def cmd_probe(args) -> int:
    try:
        cfg = _probe_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rep = probe(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"probe_{cfg.estimate}"
    rep.to_json(out / f"{stem}.json")
    rep.to_csv(out / f"{stem}.csv")
    _manifest(out / f"{stem}.manifest.json", "probe", cfg.as_dict(), {"outputs": [f"{stem}.json", f"{stem}.csv"]})

    print(f"probe {cfg.estimate} n={cfg.n} ensemble={cfg.ensemble.kind} trials={cfg.trials}")
    print(f"  {'N':>4s} {'Nt':>5s} {'max':>12s} {'median':>12s}")
    for row in rep.summary():
        print(f"  {row['N']:>4d} {row['Nt']:>5d} {row['max']:>12.5e} {row['median']:>12.5e}")
    print(f"  slope {rep.slope:.4f}  verdict {rep.verdict}  ({rep.runtime:.1f} s)")
    if rep.violations:
        print("  exponents violate: " + "; ".join(rep.violations))
    if rep.verdict == "growing":
        if rep.admissible:
            print("growth detected for admissible exponents: likely an implementation error", file=sys.stderr)
            return EXIT_GROWTH
        print("notice: growth for deliberately violated exponents (expected)")
    return EXIT_OK


def cmd_info(args) -> int:
    try:
        grid = TorusGrid(args.n, args.N)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    s = args.s if args.s is not None else (args.n - 1) / 2 + 0.1
    r = args.r if args.r is not None else s
    exps = SobolevExponents(s, r, args.epsilon)
    kept = int(np.count_nonzero(grid.dealias_mask))
    print(f"mkglab {__version__}  kernels={kernels.BACKEND}  fft_workers={fft_workers()}")
    print(f"grid n={grid.n} N={grid.N} points={grid.size} kept modes={kept} (|xi_i| <= {grid.dealias_fraction * grid.N:.3g})")
    print(f"exponents s={s:g} r={r:g} b=1/2+{args.epsilon:g}")
    bad = exps.violations(grid.n)
    if bad:
        print("well-posedness hypotheses violated:")
        for b in bad:
            print(f"  - {b}")
    else:
        print("well-posedness hypotheses satisfied")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors (exit 1); 2 is reserved for blow-up
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mkglab", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="build data, evolve, write diagnostics")
    r.add_argument("config", nargs="?", help="JSON run configuration")
    r.add_argument("--preset", help=f"named run ({', '.join(sorted(RUN_PRESETS))})")
    r.add_argument("--set", action="append", metavar="SECTION.FIELD=VALUE", help="override a config field")
    r.add_argument("--N", type=int)
    r.add_argument("--n", type=int)
    r.add_argument("--dt", type=float)
    r.add_argument("--T", type=float)
    r.add_argument("--scheme")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--strict-exponents", action="store_true", help="reject exponents outside the well-posedness range")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check-identities", help="structural identity suite on random data")
    c.add_argument("--dim", type=int, default=2)
    c.add_argument("--size", type=int, default=32)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check_identities)

    q = sub.add_parser("probe", help="estimate probe across resolutions")
    q.add_argument("--preset", help=f"named probe ({', '.join(sorted(PROBE_PRESETS))})")
    q.add_argument("--estimate", help=f"one of {', '.join(ESTIMATES)}")
    q.add_argument("--param", action="append", metavar="NAME=VALUE", help="exponent, e.g. s0=0.3")
    q.add_argument("--kind", help="ensemble kind")
    q.add_argument("--thickness", type=float)
    q.add_argument("--thickness-power", dest="thickness_power", type=float)
    q.add_argument("--decay", type=float)
    q.add_argument("--modes-per-shell", dest="modes_per_shell", type=int)
    q.add_argument("--trials", type=int, default=50)
    q.add_argument("--resolutions", help="comma-separated N values, e.g. 8,16,32")
    q.add_argument("--n", type=int, default=4)
    q.add_argument("--epsilon", type=float, default=0.05)
    q.add_argument("--window", default="cos2")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default="probe_out")
    q.set_defaults(func=cmd_probe)

    i = sub.add_parser("info", help="grid and exponent admissibility report")
    i.add_argument("--n", type=int, default=4)
    i.add_argument("--N", type=int, default=32)
    i.add_argument("--s", type=float)
    i.add_argument("--r", type=float)
    i.add_argument("--epsilon", type=float, default=0.05)
    i.set_defaults(func=cmd_info)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
