"""IMEX time integration: implicit viscous flux, explicit pressure.

Each step solves a tridiagonal system for the new velocity with the geometry
frozen at the current fixed-point iterate, then moves the nodes with the new
velocity.  The viscous matrix is an M-matrix for admissible states, and the
implicit solve is unconditionally kinetic-energy stable (the free-boundary
ghost flux is dominated by the longitudinal dissipation, with margin
2 mu + 3 lam).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import diagnostics, energy
from .core import (
    Grid,
    InitialData,
    MaterialParams,
    State,
    density_field,
    jacobian_cells,
    mass_weight_cells,
)
from .errors import ConfigError, MeshTanglingError
from .operators import boundary_stress_residual, mass_weight_nodes

__all__ = [
    "TridiagonalSystem",
    "StepConfig",
    "Monitors",
    "SeriesRecord",
    "RunResult",
    "dt_cfl",
    "assemble_viscous_system",
    "solve_tridiagonal",
    "is_diagonally_dominant",
    "step",
    "run",
]


@dataclass
class TridiagonalSystem:
    """Rows lower[i] v[i-1] + diag[i] v[i] + upper[i] v[i+1] = rhs[i]."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray


@dataclass(frozen=True)
class StepConfig:
    """Time-integration controls."""

    dt_init: float
    t_end: float
    cfl: float = 0.5
    geometry_iterations: int = 2

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"stepping.cfl: must be in (0, 1], got {self.cfl}")
        if self.geometry_iterations < 1:
            raise ConfigError("stepping.geometry_iterations: must be >= 1")
        if not self.dt_init > 0.0:
            raise ConfigError("stepping.dt_init: must be > 0")
        if self.t_end < 0.0:
            raise ConfigError("stepping.t_end: must be >= 0")


def dt_cfl(state: State, init: InitialData, grid: Grid, params: MaterialParams,
           cfg: StepConfig) -> float:
    """Pressure-wave CFL bound: cfl * min over cells of r_x dx / c.

    Vacuum cells (zero density) impose no constraint; the result is capped by
    dt_init.  The implicit viscous flux needs no step restriction.
    """
    rho = density_field(state, init, grid)
    rx = state.r_x(grid)
    live = rho > 0.0
    if not np.any(live):
        return cfg.dt_init
    c = np.sqrt(params.gamma * rho[live] ** (params.gamma - 1.0))
    bound = cfg.cfl * float(np.min(rx[live] * grid.dx / c))
    return min(bound, cfg.dt_init)


def assemble_viscous_system(state: State, init: InitialData, params: MaterialParams,
                            grid: Grid, dt: float, *,
                            source: Optional[np.ndarray] = None,
                            boundary_source: float = 0.0,
                            with_pressure: bool = True) -> TridiagonalSystem:
    """Implicit system for the end-of-step velocity with geometry frozen.

    Mass weight (x/r)^2 rho0 is lumped at nodes; the implicit flux is
    (2 mu + lam)(r^2 v)_x / (r^2 r_x) with r from the supplied state; the rhs
    carries the explicit pressure difference and the free-boundary ghost flux
    -4 mu v/r (implicit) plus any manufactured forcing.  The center row pins
    v(0) = 0.  dt = 0 degenerates to the identity system returning state.v.
    """
    n = state.r.size
    lower = np.zeros(n)
    diag = np.ones(n)
    upper = np.zeros(n)
    rhs = np.zeros(n)
    if dt == 0.0:
        rhs[:] = state.v
        rhs[0] = 0.0
        return TridiagonalSystem(lower, diag, upper, rhs)

    dx = grid.dx
    r, v = state.r, state.v
    j = jacobian_cells(r, dx)
    if np.any(j <= 0.0):
        raise MeshTanglingError(f"assemble at t={state.t}: r_x <= 0 on some cell",
                                last_good=state)
    m = mass_weight_nodes(state, init, grid)
    visc = params.longitudinal / (dx**2 * j)      # per-cell flux coefficient
    r2 = r**2

    if with_pressure:
        pres = (mass_weight_cells(init, grid) / j) ** params.gamma
    else:
        pres = np.zeros(grid.n_cells)

    # Interior nodes 1 .. n-2.
    a = m[1:-1] / dt
    lower[1:-1] = -visc[:-1] * r2[:-2]
    upper[1:-1] = -visc[1:] * r2[2:]
    diag[1:-1] = a + (visc[:-1] + visc[1:]) * r2[1:-1]
    rhs[1:-1] = a * v[1:-1] - np.diff(pres) / dx
    if source is not None:
        rhs[1:-1] += np.asarray(source)[1:-1]

    # Free-boundary node: half-cell balance with the stress-balance ghost.
    a_n = m[-1] / dt
    lower[-1] = -2.0 * visc[-1] * r2[-2]
    diag[-1] = a_n - 8.0 * params.mu / (dx * r[-1]) + 2.0 * visc[-1] * r2[-1]
    rhs[-1] = a_n * v[-1] + 2.0 * (pres[-1] - boundary_source) / dx
    if source is not None:
        rhs[-1] += np.asarray(source)[-1]

    return TridiagonalSystem(lower, diag, upper, rhs)


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    """Thomas elimination; raises on a zero or non-finite pivot."""
    n = sys.diag.size
    c_prime = np.empty(n)
    d_prime = np.empty(n)
    beta = sys.diag[0]
    if beta == 0.0 or not np.isfinite(beta):
        raise np.linalg.LinAlgError("zero pivot in row 0")
    c_prime[0] = sys.upper[0] / beta
    d_prime[0] = sys.rhs[0] / beta
    for i in range(1, n):
        beta = sys.diag[i] - sys.lower[i] * c_prime[i - 1]
        if beta == 0.0 or not np.isfinite(beta):
            raise np.linalg.LinAlgError(f"zero pivot in row {i}")
        c_prime[i] = sys.upper[i] / beta
        d_prime[i] = (sys.rhs[i] - sys.lower[i] * d_prime[i - 1]) / beta
    out = d_prime
    for i in range(n - 2, -1, -1):
        out[i] -= c_prime[i] * out[i + 1]
    return out


def is_diagonally_dominant(sys: TridiagonalSystem) -> bool:
    """Row-wise |diag| >= |lower| + |upper|; audit helper for tests."""
    return bool(np.all(np.abs(sys.diag) >= np.abs(sys.lower) + np.abs(sys.upper)))


def step(state: State, init: InitialData, params: MaterialParams, grid: Grid,
         cfg: StepConfig, *, dt: Optional[float] = None, mms=None) -> State:
    """One IMEX step; dt from the CFL bound unless supplied by the caller.

    The geometry fixed point re-solves the implicit system with pressure,
    mass weight and viscous geometry taken from the current end-of-step
    radius iterate.  Mesh tangling after the update is fatal and carries the
    pre-step state for a diagnostic snapshot.
    """
    if dt is None:
        dt = dt_cfl(state, init, grid, params, cfg)
    t_new = state.t + dt
    r_geo = state.r
    v_new = state.v
    source = None
    boundary_source = 0.0
    if mms is not None:
        source = mms.source(grid.nodes, t_new)
        boundary_source = mms.boundary_source(t_new)
    for _ in range(cfg.geometry_iterations):
        frozen = State(t=state.t, r=r_geo, v=state.v)
        sys = assemble_viscous_system(frozen, init, params, grid, dt,
                                      source=source, boundary_source=boundary_source)
        v_new = solve_tridiagonal(sys)
        v_new[0] = 0.0
        r_geo = state.r + dt * v_new
        r_geo[0] = 0.0
        if np.any(np.diff(r_geo) <= 0.0):
            raise MeshTanglingError(
                f"step to t={t_new}: mesh tangled (r_x <= 0)", last_good=state)
    return State(t=t_new, r=r_geo, v=v_new)


# ---------------------------------------------------------------------------
# Run loop with invariant monitors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Monitors:
    """Which per-record diagnostics to evaluate along a run."""

    energy: bool = True
    bounds: bool = True
    g_diag: bool = True
    localized: bool = False
    classical: bool = False
    cadence: int = 1
    callback: Optional[Callable] = None

    def __post_init__(self):
        if self.cadence < 1:
            raise ConfigError("monitors.cadence: must be >= 1")


@dataclass
class SeriesRecord:
    """One row of the emitted time series (see docs/csv_schema.md)."""

    t: float
    kinetic: float = float("nan")
    potential: float = float("nan")
    d_mu: float = float("nan")
    d_lambda: float = float("nan")
    cumulative_dissipation: float = float("nan")
    identity_residual: float = float("nan")
    radius: float = float("nan")
    max_jacobian_ratio: float = float("nan")
    max_v_over_r: float = float("nan")
    max_vx_over_rx: float = float("nan")
    gx_l2: float = float("nan")
    boundary_stress_residual: float = float("nan")

    FIELDS = ("t", "kinetic", "potential", "d_mu", "d_lambda",
              "cumulative_dissipation", "identity_residual", "radius",
              "max_jacobian_ratio", "max_v_over_r", "max_vx_over_rx",
              "gx_l2", "boundary_stress_residual")


@dataclass
class LocalizedRecord:
    """Interior-weighted functionals; second-derivative parts lag by a record."""

    t: float
    frak_e0: float
    frak_d0: float
    frak_e1: Optional[float] = None
    frak_d1: Optional[float] = None


@dataclass
class RunResult:
    state: State
    series: List[SeriesRecord]
    localized: List[LocalizedRecord]
    e0: float
    steps: int


def _make_record(state, init, params, grid, monitors, cum, e0) -> SeriesRecord:
    rec = SeriesRecord(t=state.t)
    if monitors.energy:
        kin, pot = energy.instantaneous_energy(state, init, grid, params)
        d_mu, d_lam = energy.dissipation_rate(state, grid, params)
        rec.kinetic, rec.potential = kin, pot
        rec.d_mu, rec.d_lambda = d_mu, d_lam
        rec.cumulative_dissipation = cum
        drift = kin + pot + cum - e0
        rec.identity_residual = abs(drift) / e0 if e0 > 0 else abs(drift)
    if monitors.bounds:
        cert = diagnostics.pointwise_bounds(state, grid, init.rho_bar0)
        rec.radius = cert.radius
        rec.max_jacobian_ratio = cert.max_jacobian_ratio
        rec.max_v_over_r = cert.max_v_over_r
        rec.max_vx_over_rx = cert.max_vx_over_rx
    if monitors.g_diag:
        gd = diagnostics.g_diagnostic(state, grid, include_gxx=monitors.classical)
        rec.gx_l2 = gd.gx_l2
    rec.boundary_stress_residual = boundary_stress_residual(state, init, params, grid)
    return rec


def run(initial: State, init: InitialData, params: MaterialParams, grid: Grid,
        cfg: StepConfig, monitors: Optional[Monitors] = None, *, mms=None) -> RunResult:
    """March to t_end, recording monitor rows every `cadence` steps.

    The cumulative dissipation is accumulated with the trapezoid rule at every
    step regardless of cadence.  Fatal tangling propagates with the last
    admissible state attached.
    """
    monitors = monitors or Monitors()
    state = initial
    kin0, pot0 = energy.instantaneous_energy(state, init, grid, params)
    e0 = kin0 + pot0
    if cfg.t_end == 0.0:
        return RunResult(state=state, series=[], localized=[], e0=e0, steps=0)
    cum = 0.0
    d_prev = sum(energy.dissipation_rate(state, grid, params))
    series = [_make_record(state, init, params, grid, monitors, cum, e0)]
    localized: List[LocalizedRecord] = []
    loc_window: List[tuple] = []
    if monitors.callback is not None:
        monitors.callback(state, series[-1])

    steps = 0
    while state.t < cfg.t_end - 1e-14:
        dt = dt_cfl(state, init, grid, params, cfg)
        dt = min(dt, cfg.t_end - state.t)
        prev = state
        try:
            state = step(prev, init, params, grid, cfg, dt=dt, mms=mms)
        except MeshTanglingError as err:
            err.partial_series = series
            raise
        steps += 1
        d_new = sum(energy.dissipation_rate(state, grid, params))
        cum += 0.5 * dt * (d_prev + d_new)
        d_prev = d_new

        if steps % monitors.cadence == 0 or state.t >= cfg.t_end - 1e-14:
            series.append(_make_record(state, init, params, grid, monitors, cum, e0))
            if monitors.localized:
                v_t = (state.v - prev.v) / dt
                loc = energy.localized_energies(state, v_t, init, grid, params)
                entry = LocalizedRecord(t=state.t, frak_e0=loc.frak_e0,
                                        frak_d0=loc.frak_d0)
                localized.append(entry)
                loc_window.append((state.t, state, v_t, entry))
                if len(loc_window) >= 3:
                    (t0, s0, vt0, _), (t1, s1, vt1, mid), (t2, s2, vt2, _) = loc_window[-3:]
                    v_tt = (vt2 - vt0) / (t2 - t0)
                    loc1 = energy.localized_energies(s1, vt1, init, grid, params,
                                                     v_tt=v_tt)
                    mid.frak_e1 = loc1.frak_e1
                    mid.frak_d1 = loc1.frak_d1
                    loc_window.pop(0)
            if monitors.callback is not None:
                monitors.callback(state, series[-1])

    return RunResult(state=state, series=series, localized=localized, e0=e0,
                     steps=steps)
