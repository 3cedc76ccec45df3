"""A-priori bound tracking and regularity diagnostics along a run.

The certified quantities are the compression ratio x^2/(r^2 r_x), the velocity
ratios |v/r| and |v_x/r_x|, and the interface radius.  The cap gamma_cap on
x^2 rho0/(r^2 r_x) mixes an exact branch (rho_bar * alpha^3) with an advisory
branch whose constants the theory never pins down; only the raw maxima are
certifiable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Grid, State, cell_mean, jacobian_cells, node_gradient
from .energy import InitialEnergies
from .errors import ConfigError
from .operators import cell_diff

__all__ = [
    "BoundCertificate",
    "GDiagnostic",
    "CertifyVerdict",
    "pointwise_bounds",
    "gamma_cap",
    "g_diagnostic",
    "certify_run",
]


@dataclass(frozen=True)
class BoundCertificate:
    """Extrema of the a-priori bound quantities at one instant."""

    t: float
    max_jacobian_ratio: float
    max_v_over_r: float
    max_vx_over_rx: float
    radius: float
    alpha: float          # max_jacobian_ratio ** (1/3)
    beta: float           # max of the two velocity ratios
    gamma_cap: float


def gamma_cap(alpha: float, rho_bar0: float, gamma: float,
              e0: float = None, e1: float = None, *, c_const: float = 1.0,
              c0: float = 1.0, beta: float = 0.0) -> float:
    """Density cap min(rho_bar alpha^3, (rho_bar^gamma + C a^5 E1 + C a^3 E0)^(1/gamma)).

    The first branch is exact; the second uses unit constants (advisory) and
    is skipped when the energies are not supplied.
    """
    first = rho_bar0 * alpha**3
    if e0 is None or e1 is None:
        return first
    e1_total = e1 + c0 * (alpha ** (6.0 * gamma) + beta**2) * e0
    second = (rho_bar0**gamma + c_const * alpha**5 * e1_total
              + c_const * alpha**3 * e0) ** (1.0 / gamma)
    return min(first, second)


def pointwise_bounds(state: State, grid: Grid, rho_bar0: float, *,
                     gamma: Optional[float] = None,
                     energies: Optional[InitialEnergies] = None,
                     c0: float = 1.0) -> BoundCertificate:
    """Discrete maxima of the bound quantities over cells.

    The jacobian ratio uses the paired cell averages of x^2 and r^2 r_x, so
    r = c x gives exactly c^-3.  The center cell's plain velocity ratio is
    automatically its one-sided v_x/r_x.
    """
    dx = grid.dx
    j = jacobian_cells(state.r, dx)
    ratio = grid.x2_cells / j
    rx = cell_diff(state.r, dx)
    vx_over_rx = np.abs(cell_diff(state.v, dx) / rx)
    v_over_r = np.abs(cell_mean(state.v) / cell_mean(state.r))
    max_ratio = float(np.max(ratio))
    alpha = max_ratio ** (1.0 / 3.0)
    beta = float(max(np.max(v_over_r), np.max(vx_over_rx)))
    if energies is not None and gamma is not None:
        cap = gamma_cap(alpha, rho_bar0, gamma, energies.e0, energies.e1,
                        c0=c0, beta=beta)
    else:
        cap = gamma_cap(alpha, rho_bar0, gamma if gamma is not None else 1.0)
    return BoundCertificate(t=state.t, max_jacobian_ratio=max_ratio,
                            max_v_over_r=float(np.max(v_over_r)),
                            max_vx_over_rx=float(np.max(vx_over_rx)),
                            radius=float(state.r[-1]), alpha=alpha, beta=beta,
                            gamma_cap=cap)


@dataclass(frozen=True)
class GDiagnostic:
    """Log flow-jacobian ln(r^2 r_x / x^2) and its derivative norms."""

    g: np.ndarray
    gx_l2: float
    gxx_l2: Optional[float] = None


def g_diagnostic(state: State, grid: Grid, *, include_gxx: bool = False) -> GDiagnostic:
    """Node field ln(r^2 r_x / x^2); the center uses the limit ln(r_x(0)^3).

    gxx is only evaluated for classical-regularity runs (include_gxx=True),
    mirroring the strong/classical split of the monitored norms.
    """
    x, dx = grid.nodes, grid.dx
    rx = node_gradient(state.r, dx)
    if np.any(rx <= 0.0):
        raise ConfigError("g_diagnostic: node r_x <= 0")
    ratio = np.empty_like(x)
    ratio[1:] = state.r[1:] / x[1:]
    ratio[0] = rx[0]
    g = 2.0 * np.log(ratio) + np.log(rx)
    gx = node_gradient(g, dx)
    wn = grid.trapezoid_weights
    gx_l2 = float(np.sqrt(np.sum(gx**2 * wn)))
    gxx_l2 = None
    if include_gxx:
        gxx = node_gradient(gx, dx)
        gxx_l2 = float(np.sqrt(np.sum(gxx**2 * wn)))
    return GDiagnostic(g=g, gx_l2=gx_l2, gxx_l2=gxx_l2)


@dataclass(frozen=True)
class CertifyVerdict:
    """Outcome of checking a series of bound certificates against caps."""

    passed: bool
    realized_alpha: float
    realized_beta: float
    radius_bound_ok: bool
    violations: int


def certify_run(series: Sequence, alpha_cfg: float, beta_cfg: float) -> CertifyVerdict:
    """Pass iff every record satisfies jacobian ratio <= alpha_cfg^3 and both
    velocity ratios <= beta_cfg; reports the tightest (alpha, beta) realized
    and whether the radius stayed above 1/realized_alpha at every record.

    Accepts any records exposing max_jacobian_ratio, max_v_over_r,
    max_vx_over_rx and radius (BoundCertificate or series rows).
    """
    if len(series) == 0:
        raise ConfigError("certify_run: empty series")
    max_ratio = max(rec.max_jacobian_ratio for rec in series)
    realized_alpha = max_ratio ** (1.0 / 3.0)
    realized_beta = max(max(rec.max_v_over_r, rec.max_vx_over_rx) for rec in series)
    violations = sum(1 for rec in series
                     if rec.max_jacobian_ratio > alpha_cfg**3
                     or rec.max_v_over_r > beta_cfg
                     or rec.max_vx_over_rx > beta_cfg)
    radius_ok = all(rec.radius * realized_alpha >= 1.0 - 1e-12 for rec in series)
    return CertifyVerdict(passed=violations == 0, realized_alpha=realized_alpha,
                          realized_beta=realized_beta, radius_bound_ok=radius_ok,
                          violations=violations)
