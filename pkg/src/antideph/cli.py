"""Command-line front end: JSON/flag configs in, deterministic data out.

Every run writes the requested data file plus a ``<path>.meta.json``
sidecar recording the fully resolved configuration, seed, wall time,
library version and kernel backend, which is sufficient to re-run the
exact job. Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, liouvillian, observables, sdq
from .dynamics import TrajectoryConfig, evolve_exp, evolve_rk4, kernel_backend, simulate_ensemble
from .errors import AntidephError, ConfigError
from .model import StochNHModel, model_from_dict, model_to_dict

CSV_FMT = "%.17g"


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return CSV_FMT % float(x)


def _check_keys(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON (line {exc.lineno})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return cfg


def _parse_sdq(text: str) -> sdq.SDQParams:
    """Parse the 'J=1,Gamma=1,gamma=0.05' shorthand."""
    fields = {}
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"bad --sdq item {item!r}, expected key=value")
        key, val = item.split("=", 1)
        try:
            fields[key.strip()] = float(val)
        except ValueError as exc:
            raise ConfigError(f"bad --sdq value for {key!r}: {val!r}") from exc
    _check_keys(fields, {"J", "Gamma", "gamma"}, "--sdq")
    missing = {"J", "Gamma", "gamma"} - set(fields)
    if missing:
        raise ConfigError(f"--sdq missing keys: {sorted(missing)}")
    try:
        return sdq.SDQParams(j=fields["J"], gamma_decay=fields["Gamma"], gamma_noise=fields["gamma"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _resolve_model(cfg: dict, args) -> tuple[StochNHModel, sdq.SDQParams | None]:
    """Model from flags or config; flags win. Returns (model, sdq params or None)."""
    if getattr(args, "sdq", None):
        p = _parse_sdq(args.sdq)
        return sdq.to_model(p), p
    if getattr(args, "model_file", None):
        try:
            return model_from_dict(_load_config(args.model_file)), None
        except (ValueError, AntidephError) as exc:
            raise ConfigError(f"bad model file {args.model_file}: {exc}") from exc
    if "sdq" in cfg:
        d = cfg["sdq"]
        _check_keys(d, {"J", "Gamma", "gamma"}, "config.sdq")
        try:
            p = sdq.SDQParams(j=d["J"], gamma_decay=d["Gamma"], gamma_noise=d["gamma"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad config.sdq: {exc}") from exc
        return sdq.to_model(p), p
    if "model" in cfg:
        try:
            return model_from_dict(cfg["model"]), None
        except (ValueError, AntidephError) as exc:
            raise ConfigError(f"bad config.model: {exc}") from exc
    raise ConfigError("no model given: use --sdq, --model-file, or config 'sdq'/'model'")


def _resolve_rho0(cfg: dict, args, dim: int) -> np.ndarray:
    bloch = getattr(args, "bloch", None) or cfg.get("bloch")
    if bloch is not None:
        if dim != 2:
            raise ConfigError("--bloch only applies to two-level models")
        if isinstance(bloch, str):
            try:
                bloch = [float(v) for v in bloch.split(",")]
            except ValueError as exc:
                raise ConfigError(f"bad --bloch value: {exc}") from exc
        if len(bloch) != 3:
            raise ConfigError("--bloch needs exactly three components x,y,z")
        try:
            return sdq.bloch_to_rho(sdq.BlochState(*bloch))
        except AntidephError as exc:
            raise ConfigError(str(exc)) from exc
    if "rho0" in cfg:
        rho0 = np.array(
            [[complex(re, im) for re, im in row] for row in cfg["rho0"]], dtype=complex
        )
        if rho0.shape != (dim, dim):
            raise ConfigError(f"rho0 has shape {rho0.shape}, model dimension is {dim}")
        return rho0
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0
    return rho0


def _resolve_numerics(cfg: dict, args, fields: set) -> dict:
    num = dict(cfg.get("numerics", {}))
    _check_keys(num, fields, "config.numerics")
    for name in fields:
        flag = getattr(args, name, None)
        if flag is not None:
            num[name] = flag
    return num


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return int(args.threads)
    env = os.environ.get("ANTIDEPH_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"bad ANTIDEPH_THREADS value {env!r}") from exc
    return os.cpu_count() or 1


def _range_pair(text: str, name: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{name} must be 'lo,hi'")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad {name}: {exc}") from exc
    if not lo < hi:
        raise ConfigError(f"{name} must satisfy lo < hi")
    return lo, hi


def _grid_shape(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ConfigError("--grid must look like '50x50'")
    try:
        n1, n2 = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad --grid: {exc}") from exc
    if n1 < 2 or n2 < 2:
        raise ConfigError("--grid axes need at least 2 points")
    return n1, n2


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v) for v in row))
            fh.write("\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_meta(path: str, command: str, resolved: dict, t0: float) -> None:
    meta = {
        "command": command,
        "resolved_config": resolved,
        "version": __version__,
        "kernel_backend": kernel_backend(),
        "wall_time_s": time.monotonic() - t0,
    }
    _write_json(path + ".meta.json", meta)


def _complex_pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(m)]


def _state_columns(dim: int, prefix: str) -> list[str]:
    cols = []
    for i in range(dim):
        for j in range(dim):
            cols += [f"{prefix}{i}{j}_re", f"{prefix}{i}{j}_im"]
    return cols


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_spectrum(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args.config)
    _check_keys(cfg, {"sdq", "model", "output"}, "config")
    m, p = _resolve_model(cfg, args)
    if p is not None:
        eigs = sdq.cardano_spectrum(p)
        method = "cardano"
    else:
        dec = liouvillian.decompose(liouvillian.build_liouvillian(m))
        eigs = dec.eigenvalues
        method = "dense"
    out = args.out or "spectrum.json"
    resolved = {"model": model_to_dict(m), "method": method, "out": out}
    if args.format == "csv":
        _write_csv(out, ["index", "re", "im"], [(k, z.real, z.imag) for k, z in enumerate(eigs)])
    else:
        _write_json(out, {"method": method, "eigenvalues": [[z.real, z.imag] for z in eigs]})
    _write_meta(out, "spectrum", resolved, t0)
    return 0


def _cmd_simulate(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args.config)
    _check_keys(cfg, {"sdq", "model", "rho0", "bloch", "numerics", "output"}, "config")
    m, _ = _resolve_model(cfg, args)
    num = _resolve_numerics(cfg, args, {"dt", "t_end", "backend", "record_every"})
    dt = float(num.get("dt", 0.004))
    t_end = float(num.get("t_end", 10.0))
    backend = num.get("backend", "rk4")
    if backend not in ("rk4", "exp"):
        raise ConfigError(f"simulate backend must be rk4 or exp, got {backend!r}")
    record_every = num.get("record_every")
    rho0 = _resolve_rho0(cfg, args, m.dim)
    if backend == "rk4":
        ev = evolve_rk4(m, rho0, dt, t_end, record_every=record_every)
        raw = np.ones_like(ev.times)
    else:
        ev = evolve_exp(liouvillian.build_liouvillian(m), rho0, dt, t_end, record_every=record_every)
        raw = ev.raw_traces
    header = ["t", "purity", "raw_trace"] + _state_columns(m.dim, "rho")
    rows = []
    for k, t in enumerate(ev.times):
        st = ev.states[k]
        row = [t, observables.purity(st), raw[k]]
        for z in st.reshape(-1):
            row += [z.real, z.imag]
        rows.append(row)
    out = args.out or "simulate.csv"
    _write_csv(out, header, rows)
    resolved = {
        "model": model_to_dict(m),
        "rho0": _complex_pairs(rho0),
        "numerics": {"dt": dt, "t_end": t_end, "backend": backend, "record_every": record_every},
        "out": out,
    }
    _write_meta(out, "simulate", resolved, t0)
    return 0


def _cmd_trajectories(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args.config)
    _check_keys(cfg, {"sdq", "model", "rho0", "bloch", "numerics", "output"}, "config")
    m, _ = _resolve_model(cfg, args)
    num = _resolve_numerics(
        cfg, args, {"dt", "t_end", "n_traj", "seed", "scheme", "backend", "record_every", "chunk_size"}
    )
    kernel = num.pop("backend", None)
    if kernel not in (None, "cython", "numpy"):
        raise ConfigError(f"trajectories backend must be cython or numpy, got {kernel!r}")
    try:
        tcfg = TrajectoryConfig(
            dt=float(num.get("dt", 1e-3)),
            t_end=float(num.get("t_end", 2.0)),
            n_traj=int(num.get("n_traj", 1000)),
            seed=int(num.get("seed", 0)),
            scheme=num.get("scheme", "euler_ito"),
            record_every=num.get("record_every"),
            chunk_size=int(num.get("chunk_size", 256)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rho0 = _resolve_rho0(cfg, args, m.dim)
    res = simulate_ensemble(m, rho0, tcfg, kernel=kernel)
    header = ["t"] + _state_columns(m.dim, "mean") + [
        f"stderr{i}{j}" for i in range(m.dim) for j in range(m.dim)
    ]
    rows = []
    for k, t in enumerate(res.times):
        row = [t]
        for z in res.mean[k].reshape(-1):
            row += [z.real, z.imag]
        row += list(res.stderr[k].reshape(-1))
        rows.append(row)
    out = args.out or "trajectories.csv"
    _write_csv(out, header, rows)
    resolved = {
        "model": model_to_dict(m),
        "rho0": _complex_pairs(rho0),
        "numerics": {
            "dt": tcfg.dt,
            "t_end": tcfg.t_end,
            "n_traj": tcfg.n_traj,
            "seed": tcfg.seed,
            "scheme": tcfg.scheme,
            "record_every": tcfg.record_every,
            "chunk_size": tcfg.chunk_size,
            "backend": kernel_backend(kernel),
        },
        "out": out,
    }
    _write_meta(out, "trajectories", resolved, t0)
    return 0


def _cmd_phase_diagram(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args.config)
    _check_keys(cfg, {"grid", "output"}, "config")
    grid = dict(cfg.get("grid", {}))
    _check_keys(
        grid,
        {"shape", "gammaJ_range", "ratio_range", "j"},
        "config.grid",
    )
    n1, n2 = _grid_shape(args.grid or grid.get("shape", "100x100"))
    glo, ghi = _range_pair(args.gammaj_range or grid.get("gammaJ_range", "1e-3,10"), "--gammaJ-range")
    rlo, rhi = _range_pair(args.ratio_range or grid.get("ratio_range", "0.1,100"), "--ratio-range")
    gj = np.logspace(math.log10(glo), math.log10(ghi), n1)
    ratios = np.logspace(math.log10(rlo), math.log10(rhi), n2)
    sweep = observables.sweep_phase_diagram(gj, ratios)
    header = ["gammaJ", "GammaOverJ", "gap", "omega_max", "z_ss", "y_ss", "phase_label", "status", "reason"]
    rows = [[c[k] for k in header] for c in sweep.cells]
    out = args.out or "phase_diagram.csv"
    _write_csv(out, header, rows)
    resolved = {
        "grid": {"shape": f"{n1}x{n2}", "gammaJ_range": [glo, ghi], "ratio_range": [rlo, rhi]},
        "out": out,
        "threads": _resolve_threads(args),
    }
    _write_meta(out, "phase-diagram", resolved, t0)
    return 0


def _cmd_fidelity_map(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args.config)
    _check_keys(cfg, {"grid", "bloch", "rho0", "output"}, "config")
    grid = dict(cfg.get("grid", {}))
    _check_keys(grid, {"shape", "gammaJ", "Gamma_range", "t_max"}, "config.grid")
    n1, n2 = _grid_shape(args.grid or grid.get("shape", "100x100"))
    gamma_noise = float(args.gammaj if args.gammaj is not None else grid.get("gammaJ", 0.05))
    glo, ghi = _range_pair(args.gamma_range or grid.get("Gamma_range", "0.1,100"), "--Gamma-range")
    t_max = float(args.t_max if args.t_max is not None else grid.get("t_max", 50.0))
    gammas = np.logspace(math.log10(glo), math.log10(ghi), n1)
    times = np.linspace(0.0, t_max, n2)
    rho0 = _resolve_rho0(cfg, args, 2)
    sweep = observables.sweep_fidelity_map(gamma_noise, gammas, times, rho0=rho0)
    header = ["Gamma", "t", "fidelity", "inv_gap", "period", "status", "reason"]
    rows = [[c[k] for k in header] for c in sweep.cells]
    out = args.out or "fidelity_map.csv"
    _write_csv(out, header, rows)
    resolved = {
        "grid": {"shape": f"{n1}x{n2}", "gammaJ": gamma_noise, "Gamma_range": [glo, ghi], "t_max": t_max},
        "rho0": _complex_pairs(rho0),
        "out": out,
        "threads": _resolve_threads(args),
    }
    _write_meta(out, "fidelity-map", resolved, t0)
    return 0


def _cmd_nullclines(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args.config)
    _check_keys(cfg, {"sdq", "grid", "output"}, "config")
    m, p = _resolve_model(cfg, args)
    if p is None:
        raise ConfigError("nullclines requires SDQ parameters (--sdq or config.sdq)")
    grid = dict(cfg.get("grid", {}))
    _check_keys(grid, {"n_theta"}, "config.grid")
    n_theta = int(args.theta_points if args.theta_points is not None else grid.get("n_theta", 721))
    if n_theta < 3:
        raise ConfigError("need at least 3 theta points")
    theta = np.linspace(0.0, math.pi, n_theta + 2)[1:-1]
    r_nr, r_nth = sdq.nullclines(p, theta)
    out = args.out or "nullclines.csv"
    _write_csv(out, ["theta", "r_nr", "r_ntheta"], zip(theta, r_nr, r_nth))
    resolved = {"model": model_to_dict(m), "n_theta": n_theta, "out": out}
    _write_meta(out, "nullclines", resolved, t0)
    return 0


def _cmd_standard_form(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args.config)
    _check_keys(cfg, {"sdq", "model", "output"}, "config")
    m, _ = _resolve_model(cfg, args)
    basis = liouvillian.pauli_basis() if m.dim == 2 else liouvillian.hermitian_basis(m.dim)
    h, g, a = liouvillian.anti_dephasing_coefficients(m, basis)
    sop, rates, ops = liouvillian.standard_form(h, g, a, basis)
    target = liouvillian.build_liouvillian(m)
    deviation = float(np.max(np.abs(sop.matrix - target.matrix)))
    g_tp = liouvillian.gksl_g(a, basis)
    out = args.out or "standard_form.json"
    payload = {
        "h": _complex_pairs(h),
        "g": _complex_pairs(g),
        "g_trace_preserving": _complex_pairs(g_tp),
        "coefficient_matrix": _complex_pairs(a),
        "rates": [float(r) for r in rates],
        "jump_operators": [_complex_pairs(op) for op in ops],
        "reconstruction_deviation": deviation,
    }
    _write_json(out, payload)
    resolved = {"model": model_to_dict(m), "out": out}
    _write_meta(out, "standard-form", resolved, t0)
    return 0


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    diagnostics: list[str] = []
    try:
        _check_keys(cfg, {"sdq", "model", "rho0", "bloch", "numerics", "output"}, "config")
        m, _ = _resolve_model(cfg, args)
    except (ConfigError, AntidephError) as exc:
        print(f"error: {exc}")
        return 0
    num = _resolve_numerics(cfg, args, {"dt", "t_end", "n_traj", "seed", "scheme", "backend"})
    eigs = np.linalg.eigvals(liouvillian.build_liouvillian(m).matrix)
    lam_max = float(np.max(np.abs(eigs)))
    dt = num.get("dt")
    if dt is not None and lam_max > 0 and float(dt) > 1.0 / (10.0 * lam_max):
        diagnostics.append(
            f"warning: step likely too coarse (dt={float(dt):g} > 1/(10*max|lambda|)={1.0 / (10.0 * lam_max):g})"
        )
    n_traj = int(num.get("n_traj", 1))
    if dt is not None and "t_end" in num:
        n_rec = min(1000, int(round(float(num["t_end"]) / float(dt))) + 1)
        bytes_needed = n_rec * m.dim**2 * 16 * (min(n_traj, 256) + 2)
        diagnostics.append(f"info: estimated working memory {bytes_needed / 1e6:.1f} MB")
    if not diagnostics:
        print("ok: no diagnostics")
    for line in diagnostics:
        print(line)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="antideph",
        description="Noise-averaged dynamics of stochastic non-Hermitian models",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags override it)")
    common.add_argument("--out", help="output data file path")
    common.add_argument("--format", choices=["csv", "json"], default="json")
    common.add_argument("--threads", type=int, help="worker threads (env ANTIDEPH_THREADS)")

    model_args = argparse.ArgumentParser(add_help=False)
    model_args.add_argument("--sdq", help="two-level shorthand: J=1,Gamma=1,gamma=0.05")
    model_args.add_argument("--model-file", help="JSON model descriptor file")

    state_args = argparse.ArgumentParser(add_help=False)
    state_args.add_argument("--bloch", help="initial qubit state as x,y,z")

    num_args = argparse.ArgumentParser(add_help=False)
    num_args.add_argument("--dt", type=float)
    num_args.add_argument("--t-end", dest="t_end", type=float)
    num_args.add_argument("--record-every", dest="record_every", type=int)
    num_args.add_argument("--backend", help="simulate: rk4|exp; trajectories: cython|numpy")

    p = sub.add_parser("spectrum", parents=[common, model_args], help="generator eigenvalues")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser(
        "simulate", parents=[common, model_args, state_args, num_args],
        help="deterministic evolution (rk4 or exp backend)",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser(
        "trajectories", parents=[common, model_args, state_args, num_args],
        help="SDE trajectory ensemble statistics",
    )
    p.add_argument("--n-traj", dest="n_traj", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scheme", choices=["euler_ito", "exp_step"])
    p.add_argument("--chunk-size", dest="chunk_size", type=int)
    p.set_defaults(func=_cmd_trajectories)

    p = sub.add_parser("phase-diagram", parents=[common], help="spectral/steady-state sweep")
    p.add_argument("--grid", help="axis sizes, e.g. 50x50")
    p.add_argument("--gammaJ-range", dest="gammaj_range", help="lo,hi (log spaced)")
    p.add_argument("--ratio-range", dest="ratio_range", help="Gamma/J lo,hi (log spaced)")
    p.set_defaults(func=_cmd_phase_diagram)

    p = sub.add_parser("fidelity-map", parents=[common, state_args], help="fidelity-to-steady-state sweep")
    p.add_argument("--grid", help="nGamma x nT, e.g. 100x100")
    p.add_argument("--gammaJ", dest="gammaj", type=float, help="fixed noise strength")
    p.add_argument("--Gamma-range", dest="gamma_range", help="lo,hi (log spaced)")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.set_defaults(func=_cmd_fidelity_map)

    p = sub.add_parser("nullclines", parents=[common, model_args], help="polar-plane nullcline curves")
    p.add_argument("--theta-points", dest="theta_points", type=int)
    p.set_defaults(func=_cmd_nullclines)

    p = sub.add_parser("standard-form", parents=[common, model_args], help="jump-operator decomposition")
    p.set_defaults(func=_cmd_standard_form)

    p = sub.add_parser(
        "validate", parents=[common, model_args, state_args, num_args],
        help="dry-run config diagnostics",
    )
    p.add_argument("--n-traj", dest="n_traj", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scheme", choices=["euler_ito", "exp_step"])
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AntidephError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
