"""Mimetic spatial operators for the Lagrangian momentum balance.

Staggering: r, v, rho0 live on nodes; pressure, viscous stress and the volume
jacobian live on cells.  The node<->cell difference pair satisfies an exact
summation-by-parts identity (see integration_by_parts_defect), which is what
lets the semi-discrete energy budget close without spatial leakage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Grid,
    InitialData,
    MaterialParams,
    State,
    cell_mean,
    density_field,
    jacobian_cells,
    node_gradient,
)
from .errors import MeshTanglingError

__all__ = [
    "CellFields",
    "cell_diff",
    "node_div",
    "r_squared_cells",
    "expansion_rate_cells",
    "viscous_flux",
    "pressure_field",
    "stress_fields",
    "cell_fields",
    "mass_weight_nodes",
    "momentum_residual",
    "boundary_stress_residual",
    "center_ratios",
    "integration_by_parts_defect",
]


def cell_diff(f: np.ndarray, dx: float) -> np.ndarray:
    """Node-to-cell gradient: (f_{i+1} - f_i)/dx."""
    return np.diff(f) / dx


def node_div(q: np.ndarray, dx: float) -> np.ndarray:
    """Cell-to-node difference at interior nodes: (q_{i+1/2} - q_{i-1/2})/dx."""
    return np.diff(q) / dx


def r_squared_cells(r: np.ndarray) -> np.ndarray:
    """Cell average of r^2 for the linear interpolant: (p^2 + p q + q^2)/3.

    Chosen so that r_squared_cells * r_x equals jacobian_cells exactly.
    """
    return (r[:-1] ** 2 + r[:-1] * r[1:] + r[1:] ** 2) / 3.0


def expansion_rate_cells(state: State, grid: Grid) -> np.ndarray:
    """Cell field (r^2 v)_x / (r^2 r_x) = v_x/r_x + 2 v/r, in paired form."""
    j = jacobian_cells(state.r, grid.dx)
    return cell_diff(state.r**2 * state.v, grid.dx) / j


def viscous_flux(state: State, params: MaterialParams, grid: Grid) -> np.ndarray:
    """Longitudinal viscous flux (2 mu + lam)(r^2 v)_x/(r^2 r_x) per cell."""
    return params.longitudinal * expansion_rate_cells(state, grid)


def pressure_field(state: State, init: InitialData, grid: Grid,
                   params: MaterialParams) -> np.ndarray:
    """Cell pressure: current density raised to the adiabatic exponent."""
    return density_field(state, init, grid) ** params.gamma


@dataclass(frozen=True)
class CellFields:
    """Pressure and viscous stress components per cell."""

    pressure: np.ndarray
    stress_b: np.ndarray   # (2 mu + lam) v_x/r_x + 2 lam v/r
    shear_term: np.ndarray  # 4 mu v/r


def _velocity_ratios_cells(state: State, grid: Grid):
    """Cell fields (v_x/r_x, v/r); the center cell ratio is v_1/r_1 which is
    already the one-sided v_x/r_x there, so no special case is needed."""
    rx = cell_diff(state.r, grid.dx)
    if np.any(rx <= 0.0):
        raise MeshTanglingError(f"stress fields at t={state.t}: r_x <= 0 on some cell")
    vx_over_rx = cell_diff(state.v, grid.dx) / rx
    v_over_r = cell_mean(state.v) / cell_mean(state.r)
    return vx_over_rx, v_over_r


def stress_fields(state: State, params: MaterialParams, grid: Grid):
    """Viscous stress (stress_b, shear_term) per cell."""
    vx_over_rx, v_over_r = _velocity_ratios_cells(state, grid)
    stress_b = params.longitudinal * vx_over_rx + 2.0 * params.lam * v_over_r
    shear = 4.0 * params.mu * v_over_r
    return stress_b, shear


def cell_fields(state: State, init: InitialData, grid: Grid,
                params: MaterialParams) -> CellFields:
    stress_b, shear = stress_fields(state, params, grid)
    return CellFields(pressure=pressure_field(state, init, grid, params),
                      stress_b=stress_b, shear_term=shear)


def mass_weight_nodes(state: State, init: InitialData, grid: Grid) -> np.ndarray:
    """Node field (x/r)^2 rho0; the center uses the limit x/r -> 1/r_x."""
    x = grid.nodes
    m = np.empty_like(x)
    m[1:] = (x[1:] / state.r[1:]) ** 2 * init.rho0[1:]
    rx0 = node_gradient(state.r, grid.dx)[0]
    m[0] = init.rho0[0] / rx0**2
    return m


def momentum_residual(state: State, v_t: np.ndarray, init: InitialData,
                      params: MaterialParams, grid: Grid,
                      source=None, boundary_source: float = 0.0) -> np.ndarray:
    """Node residual of the momentum balance for a supplied acceleration v_t.

    Interior nodes: (x/r)^2 rho0 v_t + D(P) - D(stress_b) - 4 mu G(v/r) with D
    the cell-to-node difference and G the node-field gradient.  The x = 1 node
    carries the weak half-cell form whose ghost flux is the interface stress
    balance.  The center entry is zero by the v(0) = 0 constraint.  Optional
    source/boundary_source subtract manufactured forcing.
    """
    dx = grid.dx
    fields = cell_fields(state, init, grid, params)
    m = mass_weight_nodes(state, init, grid)
    v_over_r_nodes = np.empty_like(state.v)
    v_over_r_nodes[1:] = state.v[1:] / state.r[1:]
    # Even-parity center value; a one-sided ratio here would knock the node-1
    # entry of the differentiated field down to first order.
    v_over_r_nodes[0] = (4.0 * v_over_r_nodes[1] - v_over_r_nodes[2]) / 3.0

    res = np.zeros_like(state.v)
    res[1:-1] = (m[1:-1] * v_t[1:-1]
                 + node_div(fields.pressure, dx)
                 - node_div(fields.stress_b, dx)
                 - 4.0 * params.mu * node_gradient(v_over_r_nodes, dx)[1:-1])
    if source is not None:
        res[1:-1] -= np.asarray(source)[1:-1]

    # x = 1: weak half-cell closure, ghost flux -4 mu v/r (+ forcing).
    q_last = fields.pressure[-1] - fields.stress_b[-1] - fields.shear_term[-1]
    q_ghost = -4.0 * params.mu * state.v[-1] / state.r[-1] + boundary_source
    res[-1] = m[-1] * v_t[-1] + (q_ghost - q_last) / (0.5 * dx)
    if source is not None:
        res[-1] -= np.asarray(source)[-1]
    return res


def boundary_stress_residual(state: State, init: InitialData,
                             params: MaterialParams, grid: Grid) -> float:
    """One-sided evaluation of pressure minus viscous stress at x = 1."""
    fields = cell_fields(state, init, grid, params)
    q = fields.pressure - fields.stress_b
    return float(1.5 * q[-1] - 0.5 * q[-2])


def center_ratios(state: State, grid: Grid):
    """(v/r, v_x/r_x) at the center; both equal v_x(0)/r_x(0) in the limit."""
    rx0 = node_gradient(state.r, grid.dx)[0]
    vx0 = node_gradient(state.v, grid.dx)[0]
    ratio = vx0 / rx0
    return ratio, ratio


def integration_by_parts_defect(q: np.ndarray, w: np.ndarray, grid: Grid) -> float:
    """Defect of the discrete integration-by-parts identity; zero to rounding.

    For a cell field q and node field w with w(0) = 0:
        sum_i D(q)_i w_i dx + sum_c q_c G(w)_c dx = q_last w_N.
    """
    dx = grid.dx
    lhs = float(np.sum(node_div(q, dx) * w[1:-1]) * dx
                + np.sum(q * cell_diff(w, dx)) * dx)
    return lhs - float(q[-1] * w[-1])
