"""Configuration loading, CLI subcommands, and bit-stable serialization.

Config files are JSON (schema in docs/config_schema.md).  Series rows are CSV
with 17-significant-digit decimals so binary64 values round-trip losslessly;
snapshots are versioned JSON.  Subcommands: run, energies, check-compat, mms,
certify.  Exit codes: 0 success, 1 config/usage error, 2 runtime fatal
(mesh tangling), 3 certification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import diagnostics, energy, mms, operators, stepper
from .core import (
    Grid,
    InitialData,
    MaterialParams,
    ProfileSpec,
    State,
    build_grid,
    compatibility_residual,
    construct_compatible_linear_velocity,
    density_field,
    derive_u1,
    derive_u2,
    sample_profile,
)
from .errors import ConfigError, MeshTanglingError

__all__ = [
    "RunConfig",
    "Thresholds",
    "load_config",
    "write_series",
    "read_series",
    "write_snapshot",
    "read_snapshot",
    "cli_main",
    "main",
]

SNAPSHOT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Thresholds:
    """User-supplied caps for the advisory smallness and bound verdicts."""

    epsilon_bar: float = 0.01
    alpha_cfg: float = 2.0
    beta_cfg: float = 0.1
    c0: float = 1.0

    def __post_init__(self):
        for name in ("epsilon_bar", "alpha_cfg", "beta_cfg", "c0"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"thresholds.{name}: must be > 0")


@dataclass(frozen=True)
class RunConfig:
    profile: ProfileSpec
    params: MaterialParams
    n_cells: int
    stepping: stepper.StepConfig
    monitors: stepper.Monitors
    thresholds: Thresholds
    output_dir: Optional[str]
    cadence: int


def _require_keys(obj: dict, allowed: set, path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _profile_from_dict(d: dict, params: MaterialParams) -> ProfileSpec:
    _require_keys(d, {"kind", "rho_bar", "rho_c", "table", "velocity"}, "profile")
    kind = d.get("kind")
    vel = d.get("velocity", {"kind": "zero"})
    _require_keys(vel, {"kind", "a", "table"}, "profile.velocity")
    vkind = vel.get("kind", "zero")
    a = float(vel.get("a", 0.0))
    if vkind == "compatible":
        # Config convenience: the linear slope that balances the interface
        # stress for a jump profile.
        if kind != "jump":
            raise ConfigError("profile.velocity: 'compatible' requires a jump profile")
        a = construct_compatible_linear_velocity(float(d.get("rho_bar", 0.0)), params)
        vkind = "linear"
    rho_table = None
    if d.get("table") is not None:
        tab = d["table"]
        rho_table = (np.asarray(tab["x"], dtype=float), np.asarray(tab["rho"], dtype=float))
    u_table = None
    if vel.get("table") is not None:
        tab = vel["table"]
        u_table = (np.asarray(tab["x"], dtype=float), np.asarray(tab["u"], dtype=float))
    return ProfileSpec(kind=kind, rho_bar=float(d.get("rho_bar", 0.0)),
                       rho_c=float(d.get("rho_c", 0.0)), rho_table=rho_table,
                       velocity=vkind, a=a, u_table=u_table)


def load_config(path) -> RunConfig:
    """Parse and validate a JSON run configuration, filling defaults."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from err
    _require_keys(raw, {"profile", "params", "grid", "stepping", "monitors",
                        "thresholds", "output"}, "config")
    for key in ("profile", "params", "grid", "stepping"):
        if key not in raw:
            raise ConfigError(f"config.{key}: required section missing")

    p = raw["params"]
    _require_keys(p, {"mu", "lambda", "gamma"}, "params")
    params = MaterialParams(mu=float(p.get("mu", 0.0)),
                            lam=float(p.get("lambda", 0.0)),
                            gamma=float(p.get("gamma", 0.0)))
    profile = _profile_from_dict(raw["profile"], params)

    g = raw["grid"]
    _require_keys(g, {"n_cells"}, "grid")
    n_cells = int(g["n_cells"])

    s = raw["stepping"]
    _require_keys(s, {"dt_init", "t_end", "cfl", "geometry_iterations"}, "stepping")
    stepping = stepper.StepConfig(dt_init=float(s["dt_init"]),
                                  t_end=float(s["t_end"]),
                                  cfl=float(s.get("cfl", 0.5)),
                                  geometry_iterations=int(s.get("geometry_iterations", 2)))

    m = raw.get("monitors", {})
    _require_keys(m, {"energy", "bounds", "g_diag", "localized", "classical"}, "monitors")
    out = raw.get("output", {})
    _require_keys(out, {"directory", "cadence"}, "output")
    cadence = int(out.get("cadence", 1))
    monitors = stepper.Monitors(energy=bool(m.get("energy", True)),
                                bounds=bool(m.get("bounds", True)),
                                g_diag=bool(m.get("g_diag", True)),
                                localized=bool(m.get("localized", False)),
                                classical=bool(m.get("classical", False)),
                                cadence=cadence)

    t = raw.get("thresholds", {})
    _require_keys(t, {"epsilon_bar", "alpha_cfg", "beta_cfg", "c0"}, "thresholds")
    thresholds = Thresholds(epsilon_bar=float(t.get("epsilon_bar", 0.01)),
                            alpha_cfg=float(t.get("alpha_cfg", 2.0)),
                            beta_cfg=float(t.get("beta_cfg", 0.1)),
                            c0=float(t.get("c0", 1.0)))

    return RunConfig(profile=profile, params=params, n_cells=n_cells,
                     stepping=stepping, monitors=monitors, thresholds=thresholds,
                     output_dir=out.get("directory"), cadence=cadence)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.16e}"


def write_series(series: List, path) -> None:
    """CSV, one row per record, 17 significant digits, time order."""
    path = Path(path)
    lines = [",".join(stepper.SeriesRecord.FIELDS)]
    for rec in series:
        lines.append(",".join(_fmt(getattr(rec, name))
                              for name in stepper.SeriesRecord.FIELDS))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as err:
        raise ConfigError(f"write_series: cannot write {path}: {err}") from err


def read_series(path) -> List[stepper.SeriesRecord]:
    path = Path(path)
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    if tuple(header) != stepper.SeriesRecord.FIELDS:
        raise ConfigError(f"read_series: unexpected header in {path}")
    out = []
    for line in lines[1:]:
        vals = [float(tok) for tok in line.split(",")]
        out.append(stepper.SeriesRecord(**dict(zip(header, vals))))
    return out


def write_snapshot(state: State, init: InitialData, grid: Grid,
                   params: MaterialParams, path, flag: Optional[str] = None) -> None:
    """Versioned JSON snapshot of the state plus derived cell fields."""
    fields = operators.cell_fields(state, init, grid, params)
    gdiag = diagnostics.g_diagnostic(state, grid)
    doc = {
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
        "flag": flag,
        "t": state.t,
        "n_cells": grid.n_cells,
        "params": {"mu": params.mu, "lambda": params.lam, "gamma": params.gamma},
        "nodes": grid.nodes.tolist(),
        "r": state.r.tolist(),
        "v": state.v.tolist(),
        "rho0": init.rho0.tolist(),
        "density": density_field(state, init, grid).tolist(),
        "pressure": fields.pressure.tolist(),
        "stress_b": fields.stress_b.tolist(),
        "g": gdiag.g.tolist(),
    }
    path = Path(path)
    try:
        path.write_text(json.dumps(doc))
    except OSError as err:
        raise ConfigError(f"write_snapshot: cannot write {path}: {err}") from err


def read_snapshot(path):
    """Reload a snapshot; returns (state, doc)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SNAPSHOT_SCHEMA_VERSION:
        raise ConfigError(f"read_snapshot: unsupported schema in {path}")
    state = State(t=float(doc["t"]), r=np.asarray(doc["r"]), v=np.asarray(doc["v"]))
    return state, doc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _setup(cfg: RunConfig):
    grid = build_grid(cfg.n_cells)
    init = sample_profile(cfg.profile, grid, cfg.params)
    u1 = derive_u1(init, cfg.params, grid)
    init = init.with_accelerations(u1, np.zeros_like(u1))
    u2 = derive_u2(init, cfg.params, grid)
    init = init.with_accelerations(u1, u2)
    return grid, init


def _cmd_run(cfg: RunConfig) -> int:
    grid, init = _setup(cfg)
    state = State.initial(grid, init)
    outdir = Path(cfg.output_dir or "out")
    snapdir = outdir / "snapshots"
    snapdir.mkdir(parents=True, exist_ok=True)

    counter = {"n": 0}

    def snapshot_cb(st, rec):
        write_snapshot(st, init, grid, cfg.params, snapdir / f"{counter['n']:06d}.json")
        counter["n"] += 1

    monitors = stepper.Monitors(energy=cfg.monitors.energy, bounds=cfg.monitors.bounds,
                                g_diag=cfg.monitors.g_diag,
                                localized=cfg.monitors.localized,
                                classical=cfg.monitors.classical,
                                cadence=cfg.cadence, callback=snapshot_cb)
    try:
        result = stepper.run(state, init, cfg.params, grid, cfg.stepping, monitors)
    except MeshTanglingError as err:
        if err.last_good is not None:
            write_snapshot(err.last_good, init, grid, cfg.params,
                           snapdir / "fatal.json", flag="mesh_tangled_last_good")
        if getattr(err, "partial_series", None):
            write_series(err.partial_series, outdir / "series.csv")
        print(f"fatal: {err}", file=sys.stderr)
        return 2

    write_series(result.series, outdir / "series.csv")
    energies = energy.initial_energies(init, grid, cfg.params)
    verdict = None
    if cfg.monitors.bounds and result.series:
        verdict = diagnostics.certify_run(result.series, cfg.thresholds.alpha_cfg,
                                          cfg.thresholds.beta_cfg)
    report = [f"steps: {result.steps}", f"final t: {result.state.t:.12g}",
              f"e0: {result.e0:.12g}"]
    if cfg.monitors.energy and result.series:
        res = energy.energy_identity_residual(result.series, result.e0)
        report.append(f"energy identity residual (max relative): {res:.6e}")
    small = energy.smallness_report(energies, cfg.thresholds.epsilon_bar, cfg.params,
                                    c0=cfg.thresholds.c0)
    report.append(f"initial energies: e0={energies.e0:.12g} e1={energies.e1:.12g} "
                  f"e2={energies.e2:.12g} e3={energies.e3:.12g} e4={energies.e4:.12g}")
    report.append(f"smallness (advisory, eps_bar={small.epsilon_bar:g}): "
                  f"{'pass' if small.passed else 'fail'}")
    if verdict is not None:
        report.append(f"bound certificate: {'pass' if verdict.passed else 'fail'} "
                      f"(realized alpha={verdict.realized_alpha:.6g}, "
                      f"beta={verdict.realized_beta:.6g}, "
                      f"radius bound {'ok' if verdict.radius_bound_ok else 'violated'})")
    (outdir / "report.txt").write_text("\n".join(report) + "\n")
    print("\n".join(report))
    return 0


def _cmd_energies(cfg: RunConfig) -> int:
    grid, init = _setup(cfg)
    energies = energy.initial_energies(init, grid, cfg.params)
    small = energy.smallness_report(energies, cfg.thresholds.epsilon_bar, cfg.params,
                                    c0=cfg.thresholds.c0)
    for name in ("e0", "e1", "e2", "e3", "e4"):
        print(f"{name} = {getattr(energies, name):.12g}")
    print(f"e1_combined (advisory, c0={cfg.thresholds.c0:g}) = {small.e1_combined:.12g}")
    print(f"smallness vs eps_bar={small.epsilon_bar:g}: "
          f"e0 {'<' if small.e0_ok else '>='} eps_bar, "
          f"e1 {'<' if small.e1_ok else '>='} eps_bar, "
          f"e2 {'<' if small.e2_ok else '>='} eps_bar -> "
          f"{'pass' if small.passed else 'fail'}")
    return 0


def _cmd_check_compat(cfg: RunConfig) -> int:
    grid, _ = _setup(cfg)
    init = sample_profile(cfg.profile, grid, cfg.params)
    res = compatibility_residual(init, cfg.params, grid)
    print(f"compatibility residual at x=1: {res:.6e}")
    return 0


def _cmd_mms(args) -> int:
    params = MaterialParams(mu=1.0, lam=1.0, gamma=2.0)
    grids = [int(s) for s in args.grids.split(",")]
    dts = [float(s) for s in args.dts.split(",")]
    table = mms.convergence_study(
        mms.builtin_case(params), grids, dts, params, args.t_end,
        spatial_case_override=mms.spatial_case(params), spatial_dt=args.spatial_dt)
    print(table.summary())
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        lines = ["kind,n_cells,dt,err_linf_v,err_l2_v,err_linf_r,err_l2_r"]
        for r in table.rows:
            lines.append(f"{r.kind},{r.n_cells},{_fmt(r.dt)},{_fmt(r.err_linf_v)},"
                         f"{_fmt(r.err_l2_v)},{_fmt(r.err_linf_r)},{_fmt(r.err_l2_r)}")
        (outdir / "rates.csv").write_text("\n".join(lines) + "\n")
        (outdir / "rates.txt").write_text(table.summary() + "\n")
    return 0


def _cmd_certify(args) -> int:
    series = read_series(args.series)
    verdict = diagnostics.certify_run(series, args.alpha_cfg, args.beta_cfg)
    print(f"records: {len(series)}")
    print(f"realized alpha: {verdict.realized_alpha:.6g}")
    print(f"realized beta:  {verdict.realized_beta:.6g}")
    print(f"radius >= 1/alpha at every record: {verdict.radius_bound_ok}")
    print(f"verdict: {'pass' if verdict.passed else 'fail'} "
          f"({verdict.violations} violating records)")
    return 0 if verdict.passed else 3


def cli_main(argv) -> int:
    parser = argparse.ArgumentParser(prog="sphgas",
                                     description="Free-boundary spherical "
                                     "viscous-gas simulator and invariant checker")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "energies", "check-compat"):
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON run configuration")
    p_mms = sub.add_parser("mms")
    p_mms.add_argument("--out", default=None)
    p_mms.add_argument("--grids", default="64,128,256")
    p_mms.add_argument("--dts", default="4e-3,2e-3,1e-3")
    p_mms.add_argument("--t-end", type=float, default=0.25)
    p_mms.add_argument("--spatial-dt", type=float, default=5e-6)
    p_cert = sub.add_parser("certify")
    p_cert.add_argument("series", help="series CSV from a previous run")
    p_cert.add_argument("--alpha-cfg", type=float, default=2.0)
    p_cert.add_argument("--beta-cfg", type=float, default=0.1)

    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return 1
    try:
        if args.command == "mms":
            return _cmd_mms(args)
        if args.command == "certify":
            return _cmd_certify(args)
        cfg = load_config(args.config)
        if args.command == "run":
            return _cmd_run(cfg)
        if args.command == "energies":
            return _cmd_energies(cfg)
        if args.command == "check-compat":
            return _cmd_check_compat(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except MeshTanglingError as err:
        print(f"fatal: {err}", file=sys.stderr)
        return 2
    return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
