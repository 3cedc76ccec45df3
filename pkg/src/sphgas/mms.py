"""Manufactured-solution harness for convergence measurement.

Closed-form sources were derived offline by symbolic differentiation of the
momentum balance and the interface stress balance, then frozen here; the
derivation script and write-up live in tools/derive_oracles.py and
docs/mms_derivation.md.  Two built-in cases:

* builtin_case: the self-similar map r* = x s(t).  The paired discretization
  reproduces self-similar motion exactly, so this case isolates the temporal
  error (and doubles as an exactness check).
* spatial_case: a non-self-similar map r* = x (1 + phi(t) (1 + x^2/2)) whose
  truncation error is genuinely O(dx^2); used for the spatial order sweep.

Both use rho0 = 1, for which the profile stays away from vacuum on the
horizons used here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .core import (
    Grid,
    MaterialParams,
    ProfileSpec,
    State,
    build_grid,
    sample_profile,
)
from .errors import ConfigError
from . import stepper

__all__ = [
    "ManufacturedCase",
    "RateTable",
    "builtin_case",
    "spatial_case",
    "convergence_study",
]


@dataclass(frozen=True)
class ManufacturedCase:
    """Analytic fields plus the forcing that makes them solve the system.

    v_star is the exact time derivative of r_star; source(x, t) is added to
    the momentum balance, boundary_source(t) to the interface stress balance.
    """

    r_star: Callable
    v_star: Callable
    source: Callable
    boundary_source: Callable
    params: MaterialParams
    description: str

    def initial_state(self, grid: Grid) -> State:
        return State(t=0.0, r=self.r_star(grid.nodes, 0.0),
                     v=self.v_star(grid.nodes, 0.0))


def builtin_case(params: Optional[MaterialParams] = None,
                 eps: float = 0.1) -> ManufacturedCase:
    """Self-similar dilation r* = x (1 + eps (1 - exp(-t))), rho0 = 1.

    Pressure and viscous flux are spatially constant on this map, so the
    interior source reduces to the inertial term x s''(t)/s(t)^2 and the
    boundary source to s^(-3 gamma) - (2 mu + 3 lam) s'(t)/s(t); at eps = 0
    the interior source vanishes and the boundary source is the constant
    initial pressure.
    """
    params = params or MaterialParams(mu=1.0, lam=1.0, gamma=2.0)
    mu, lam, gamma = params.mu, params.lam, params.gamma

    def s(t):
        return 1.0 + eps * (1.0 - math.exp(-t))

    def r_star(x, t):
        return x * s(t)

    def v_star(x, t):
        return x * eps * math.exp(-t)

    def source(x, t):
        return -x * eps * math.exp(-t) / s(t) ** 2

    def boundary_source(t):
        return s(t) ** (-3.0 * gamma) - (2.0 * mu + 3.0 * lam) * eps * math.exp(-t) / s(t)

    return ManufacturedCase(r_star=r_star, v_star=v_star, source=source,
                            boundary_source=boundary_source, params=params,
                            description="self-similar dilation, temporal-order case")


def spatial_case(params: Optional[MaterialParams] = None,
                 eps: float = 0.1) -> ManufacturedCase:
    """Non-self-similar map r* = x (1 + phi(t) psi(x)), psi = 1 + x^2/2.

    With R = 1 + phi psi, B = 1 + phi (1 + 3x^2/2) the exact pieces are
        jacobian  J = R^2 B,            pressure P = J^(-gamma),
        flux      F = (2mu+lam) phi' N / (R B),
        N = 3 R psi + x^2 (2 phi psi + R),
    and the interior source is (x/r*)^2 v*_t + P_x - F_x with
        P_x = -gamma J^(-gamma-1) phi x R (2B + 3R),
        F_x = (2mu+lam) phi' (N' D - N D') / D^2,  D = R B,
        N'  = x (7 phi psi + 5 R + 3 phi x^2),     D' = phi x (B + 3 R).
    Frozen spot values of these expressions are regression-tested against the
    offline symbolic derivation.
    """
    params = params or MaterialParams(mu=1.0, lam=1.0, gamma=2.0)
    c2, lam, mu, gamma = params.longitudinal, params.lam, params.mu, params.gamma

    def phi(t):
        return eps * (1.0 - math.exp(-t))

    def phi_p(t):
        return eps * math.exp(-t)

    def r_star(x, t):
        return x * (1.0 + phi(t) * (1.0 + 0.5 * x**2))

    def v_star(x, t):
        return x * phi_p(t) * (1.0 + 0.5 * x**2)

    def source(x, t):
        x = np.asarray(x, dtype=float)
        p, pp = phi(t), phi_p(t)
        psi = 1.0 + 0.5 * x**2
        big_r = 1.0 + p * psi
        big_b = 1.0 + p * (1.0 + 1.5 * x**2)
        jac = big_r**2 * big_b
        inertial = (-pp * x * psi) / big_r**2
        p_x = -gamma * jac ** (-gamma - 1.0) * p * x * big_r * (2.0 * big_b + 3.0 * big_r)
        n_flux = 3.0 * big_r * psi + x**2 * (2.0 * p * psi + big_r)
        n_prime = x * (7.0 * p * psi + 5.0 * big_r + 3.0 * p * x**2)
        d_flux = big_r * big_b
        d_prime = p * x * (big_b + 3.0 * big_r)
        f_x = c2 * pp * (n_prime * d_flux - n_flux * d_prime) / d_flux**2
        return inertial + p_x - f_x

    def boundary_source(t):
        p, pp = phi(t), phi_p(t)
        jac1 = (1.0 + 1.5 * p) ** 2 * (1.0 + 2.5 * p)
        return (jac1 ** (-gamma)
                - c2 * 2.5 * pp / (1.0 + 2.5 * p)
                - 2.0 * lam * 1.5 * pp / (1.0 + 1.5 * p))

    return ManufacturedCase(r_star=r_star, v_star=v_star, source=source,
                            boundary_source=boundary_source, params=params,
                            description="non-self-similar map, spatial-order case")


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------

@dataclass
class RateRow:
    kind: str          # "spatial" | "temporal"
    n_cells: int
    dt: float
    err_linf_v: float
    err_l2_v: float
    err_linf_r: float
    err_l2_r: float


@dataclass
class RateTable:
    """Error levels for both sweeps plus log-log least-squares slopes."""

    rows: List[RateRow]
    spatial_rate_v: float
    spatial_rate_r: float
    temporal_rate_v: float
    temporal_rate_r: float
    monotone_spatial: bool
    monotone_temporal: bool
    exact_spatial: bool = False
    exact_temporal: bool = False

    def summary(self) -> str:
        lines = ["kind      n_cells        dt   err_linf_v     err_l2_v   err_linf_r     err_l2_r"]
        for r in self.rows:
            lines.append(f"{r.kind:<9} {r.n_cells:>7} {r.dt:>9.3e} {r.err_linf_v:>12.5e} "
                         f"{r.err_l2_v:>12.5e} {r.err_linf_r:>12.5e} {r.err_l2_r:>12.5e}")
        sp = "exact" if self.exact_spatial else f"{self.spatial_rate_v:.3f} (v) / {self.spatial_rate_r:.3f} (r)"
        te = "exact" if self.exact_temporal else f"{self.temporal_rate_v:.3f} (v) / {self.temporal_rate_r:.3f} (r)"
        lines.append(f"spatial rate:  {sp}" + ("" if self.monotone_spatial else "  [non-monotone]"))
        lines.append(f"temporal rate: {te}" + ("" if self.monotone_temporal else "  [non-monotone]"))
        return "\n".join(lines)


def _default_advance(case: ManufacturedCase, n_cells: int, dt: float,
                     params: MaterialParams, t_end: float):
    grid = build_grid(n_cells)
    init = sample_profile(ProfileSpec.jump(1.0), grid, params)
    steps = max(1, round(t_end / dt))
    dt_exact = t_end / steps
    cfg = stepper.StepConfig(dt_init=dt_exact, t_end=t_end, cfl=1.0)
    state = case.initial_state(grid)
    for _ in range(steps):
        state = stepper.step(state, init, params, grid, cfg, dt=dt_exact, mms=case)
    return grid, state


def _errors(case: ManufacturedCase, grid: Grid, state: State) -> RateRow:
    wn = grid.trapezoid_weights
    dv = state.v - case.v_star(grid.nodes, state.t)
    dr = state.r - case.r_star(grid.nodes, state.t)
    return (float(np.max(np.abs(dv))), float(np.sqrt(np.sum(dv**2 * wn))),
            float(np.max(np.abs(dr))), float(np.sqrt(np.sum(dr**2 * wn))))


def _fit_rate(hs, errs):
    errs = np.asarray(errs)
    if np.all(errs < 1e-13):
        return float("nan"), True
    safe = np.maximum(errs, 1e-300)
    slope = np.polyfit(np.log(hs), np.log(safe), 1)[0]
    return float(slope), False


def convergence_study(case: ManufacturedCase, grids: List[int], dts: List[float],
                      params: MaterialParams, t_end: float, *,
                      spatial_case_override: Optional[ManufacturedCase] = None,
                      spatial_dt: Optional[float] = None,
                      advance=None) -> RateTable:
    """Measure spatial and temporal convergence orders.

    Spatial sweep: the grids list at a tiny fixed dt (default min(dts)/16),
    run on spatial_case_override when given (the self-similar default case
    has zero spatial truncation error on this discretization, so a
    non-degenerate case must be supplied to see the O(dx^2) slope).
    Temporal sweep: the dts list at the finest grid.  `advance` can replace
    the integrator (e.g. with the exact evaluator) for plumbing checks.
    """
    if len(grids) < 3 or len(dts) < 3:
        raise ConfigError("convergence_study: need >= 3 grid and >= 3 dt levels")
    advance = advance or _default_advance
    sp_case = spatial_case_override or case
    sp_dt = spatial_dt if spatial_dt is not None else min(dts) / 16.0

    rows: List[RateRow] = []
    sp_errs_v, sp_errs_r = [], []
    for n in sorted(grids):
        grid, state = advance(sp_case, n, sp_dt, params, t_end)
        linf_v, l2_v, linf_r, l2_r = _errors(sp_case, grid, state)
        rows.append(RateRow("spatial", n, sp_dt, linf_v, l2_v, linf_r, l2_r))
        sp_errs_v.append(l2_v)
        sp_errs_r.append(l2_r)

    te_errs_v, te_errs_r = [], []
    n_fine = max(grids)
    for dt in sorted(dts, reverse=True):
        grid, state = advance(case, n_fine, dt, params, t_end)
        linf_v, l2_v, linf_r, l2_r = _errors(case, grid, state)
        rows.append(RateRow("temporal", n_fine, dt, linf_v, l2_v, linf_r, l2_r))
        te_errs_v.append(l2_v)
        te_errs_r.append(l2_r)

    hs = [1.0 / n for n in sorted(grids)]
    sp_rate_v, sp_exact_v = _fit_rate(hs, sp_errs_v)
    sp_rate_r, _ = _fit_rate(hs, sp_errs_r)
    te_rate_v, te_exact_v = _fit_rate(sorted(dts, reverse=True), te_errs_v)
    te_rate_r, _ = _fit_rate(sorted(dts, reverse=True), te_errs_r)
    mono_sp = all(a >= b for a, b in zip(sp_errs_v, sp_errs_v[1:])) or sp_exact_v
    mono_te = all(a >= b for a, b in zip(te_errs_v, te_errs_v[1:])) or te_exact_v
    return RateTable(rows=rows, spatial_rate_v=sp_rate_v, spatial_rate_r=sp_rate_r,
                     temporal_rate_v=te_rate_v, temporal_rate_r=te_rate_r,
                     monotone_spatial=mono_sp, monotone_temporal=mono_te,
                     exact_spatial=sp_exact_v, exact_temporal=te_exact_v)
