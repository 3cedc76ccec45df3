"""Reference grid, material parameters, initial-data profiles and derived fields.

The simulator works on the fixed reference interval [0, 1] (initial radius 1).
Primary unknowns are the particle radius r(x, t) and velocity v(x, t) stored at
grid nodes; densities, pressures and stresses live on cells.  The initial
density may touch vacuum at x = 1 either with a jump (rho0 bounded away from
zero) or continuously with the physical-vacuum profile
rho0 = rho_c * (1 - x^2)^(1/(gamma-1)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, MeshTanglingError

__all__ = [
    "MaterialParams",
    "Grid",
    "ProfileSpec",
    "InitialData",
    "State",
    "build_grid",
    "sample_profile",
    "derive_u1",
    "derive_u2",
    "compatibility_residual",
    "construct_compatible_linear_velocity",
    "density_field",
    "node_gradient",
    "cell_mean",
    "jacobian_cells",
    "mass_weight_cells",
]


# ---------------------------------------------------------------------------
# Difference stencils shared by the derived-field operations
# ---------------------------------------------------------------------------

def node_gradient(f: np.ndarray, dx: float) -> np.ndarray:
    """d/dx of a node field: centered interior, second-order one-sided ends."""
    g = np.empty_like(f, dtype=float)
    g[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
    g[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)
    return g


def cell_mean(f: np.ndarray) -> np.ndarray:
    """Arithmetic mean of adjacent node values, one entry per cell."""
    return 0.5 * (f[:-1] + f[1:])


def jacobian_cells(r: np.ndarray, dx: float) -> np.ndarray:
    """Cell volume jacobian r^2 r_x, discretized as (r_{i+1}^3 - r_i^3)/(3 dx).

    This is the exact cell average of r^2 r_x for the linear-in-cell
    interpolant of r, and its time derivative equals the node difference of
    r^2 v exactly.  That pairing is what keeps the discrete energy identity
    and the Eulerian mass reconstruction structural rather than approximate.
    """
    return (r[1:] ** 3 - r[:-1] ** 3) / (3.0 * dx)


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialParams:
    """Viscosities and adiabatic exponent for the barotropic law P = rho^gamma."""

    mu: float
    lam: float
    gamma: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigError(f"params.mu: must be > 0, got {self.mu}")
        if not self.lam > 0:
            raise ConfigError(f"params.lambda: must be > 0, got {self.lam}")
        if not self.gamma > 1:
            raise ConfigError(f"params.gamma: must be > 1, got {self.gamma}")

    @property
    def longitudinal(self) -> float:
        """Combination 2*mu + lambda governing the longitudinal viscous flux."""
        return 2.0 * self.mu + self.lam


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on [0, 1] with n_cells cells."""

    n_cells: int
    nodes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", _freeze(self.nodes))
        if self.nodes[0] != 0.0 or self.nodes[-1] != 1.0:
            raise ConfigError("grid.nodes: endpoints must be exactly 0 and 1")
        if np.any(np.diff(self.nodes) <= 0):
            raise ConfigError("grid.nodes: must be strictly increasing")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def cell_centers(self) -> np.ndarray:
        return cell_mean(self.nodes)

    @property
    def x2_cells(self) -> np.ndarray:
        """Cell average of x^2, (x_{i+1}^3 - x_i^3)/(3 dx); pairs with jacobian_cells."""
        return jacobian_cells(self.nodes, self.dx)

    @property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.nodes.shape, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


def build_grid(n_cells: int) -> Grid:
    """Uniform grid; at least 8 cells so the one-sided center stencils fit."""
    if n_cells < 8:
        raise ConfigError(f"grid.n_cells: must be >= 8, got {n_cells}")
    nodes = np.linspace(0.0, 1.0, n_cells + 1)
    return Grid(n_cells=n_cells, nodes=nodes)


@dataclass(frozen=True)
class ProfileSpec:
    """Initial density profile plus initial velocity, both sampled at nodes.

    Density kinds: "jump" (rho0 = rho_bar up to the interface),
    "physical_vacuum" (rho0 = rho_c (1-x^2)^(1/(gamma-1))), or "custom"
    (piecewise-linear table).  Velocity kinds: "zero", "linear" (a*x) or
    "custom" (piecewise-linear table with u(0) = 0).
    """

    kind: str
    rho_bar: float = 0.0
    rho_c: float = 0.0
    rho_table: Optional[tuple] = None
    velocity: str = "zero"
    a: float = 0.0
    u_table: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("jump", "physical_vacuum", "custom"):
            raise ConfigError(f"profile.kind: unknown kind {self.kind!r}")
        if self.velocity not in ("zero", "linear", "custom"):
            raise ConfigError(f"profile.velocity: unknown kind {self.velocity!r}")
        if self.kind == "jump" and self.rho_bar < 0:
            raise ConfigError("profile.rho_bar: must be >= 0")
        if self.kind == "physical_vacuum" and not self.rho_c > 0:
            raise ConfigError("profile.rho_c: must be > 0")
        for name, table in (("rho_table", self.rho_table), ("u_table", self.u_table)):
            if table is not None:
                xs, vals = table
                xs = np.asarray(xs, dtype=float)
                if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
                    raise ConfigError(f"profile.{name}: abscissae must increase from 0 to 1")
                if len(xs) != len(vals):
                    raise ConfigError(f"profile.{name}: mismatched table lengths")

    @staticmethod
    def jump(rho_bar: float, velocity: str = "zero", a: float = 0.0) -> "ProfileSpec":
        return ProfileSpec(kind="jump", rho_bar=rho_bar, velocity=velocity, a=a)

    @staticmethod
    def physical_vacuum(rho_c: float, velocity: str = "zero", a: float = 0.0) -> "ProfileSpec":
        return ProfileSpec(kind="physical_vacuum", rho_c=rho_c, velocity=velocity, a=a)


@dataclass(frozen=True)
class InitialData:
    """Initial node fields and the bound constants derived from them.

    u1 and u2 are the first and second time derivatives of the velocity at
    t = 0, filled in by derive_u1 / derive_u2.
    """

    rho0: np.ndarray
    u0: np.ndarray
    m_bound: float
    rho_bar0: float
    u1: Optional[np.ndarray] = None
    u2: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "rho0", _freeze(self.rho0))
        object.__setattr__(self, "u0", _freeze(self.u0))
        if self.u1 is not None:
            object.__setattr__(self, "u1", _freeze(self.u1))
        if self.u2 is not None:
            object.__setattr__(self, "u2", _freeze(self.u2))
        if np.any(self.rho0 < 0):
            raise ConfigError("rho0: negative density")
        if self.u0[0] != 0.0:
            raise ConfigError("u0: center velocity must vanish")

    def with_accelerations(self, u1: np.ndarray, u2: np.ndarray) -> "InitialData":
        return InitialData(rho0=self.rho0, u0=self.u0, m_bound=self.m_bound,
                           rho_bar0=self.rho_bar0, u1=u1, u2=u2)


@dataclass(frozen=True)
class State:
    """Particle radius and velocity at the grid nodes at time t."""

    t: float
    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", _freeze(self.r))
        object.__setattr__(self, "v", _freeze(self.v))
        if self.r.shape != self.v.shape:
            raise ConfigError("state: r and v must have the same shape")
        if self.r[0] != 0.0:
            raise ConfigError("state: r(0) must be exactly 0")
        if self.v[0] != 0.0:
            raise ConfigError("state: v(0) must be exactly 0")
        if np.any(np.diff(self.r) <= 0.0):
            raise MeshTanglingError(f"state at t={self.t}: r is not strictly increasing")

    def r_x(self, grid: Grid) -> np.ndarray:
        """Cell field r_x by differencing adjacent nodes."""
        return np.diff(self.r) / grid.dx

    @staticmethod
    def initial(grid: Grid, init: InitialData) -> "State":
        """Reference configuration r = x moving with the initial velocity."""
        return State(t=0.0, r=grid.nodes.copy(), v=init.u0.copy())


# ---------------------------------------------------------------------------
# Profile sampling and derived initial fields
# ---------------------------------------------------------------------------

def sample_profile(spec: ProfileSpec, grid: Grid, params: MaterialParams) -> InitialData:
    """Sample rho0 and u0 at the nodes and compute the velocity bound M."""
    x = grid.nodes
    if spec.kind == "jump":
        rho0 = np.full_like(x, float(spec.rho_bar))
    elif spec.kind == "physical_vacuum":
        base = np.clip(1.0 - x**2, 0.0, None)
        rho0 = spec.rho_c * base ** (1.0 / (params.gamma - 1.0))
    else:
        xs, vals = spec.rho_table
        rho0 = np.interp(x, np.asarray(xs, dtype=float), np.asarray(vals, dtype=float))
        if np.any(rho0[:-1] <= 0.0):
            raise ConfigError("profile.rho_table: non-positive interior density")

    if spec.velocity == "zero":
        u0 = np.zeros_like(x)
    elif spec.velocity == "linear":
        u0 = spec.a * x
    else:
        xs, vals = spec.u_table
        u0 = np.interp(x, np.asarray(xs, dtype=float), np.asarray(vals, dtype=float))
        if u0[0] != 0.0:
            raise ConfigError("profile.u_table: u0(0) must vanish")

    u0x = node_gradient(u0, grid.dx)
    u0_over_x = np.empty_like(u0)
    u0_over_x[1:] = u0[1:] / x[1:]
    u0_over_x[0] = u0x[0]
    m_bound = float(max(np.max(np.abs(u0x)), np.max(np.abs(u0_over_x))))
    return InitialData(rho0=rho0, u0=u0, m_bound=m_bound, rho_bar0=float(rho0.max()))


def node_gradient_parity(f: np.ndarray, dx: float, odd: bool) -> np.ndarray:
    """Node gradient with ghost values chosen for a smooth error field.

    Fields of spherically symmetric data extend through x = 0 with definite
    parity (velocity-like fields odd, density-like fields even), so the
    center uses the reflection ghost; the right end uses a cubic
    extrapolation ghost, whose centered difference carries the same leading
    error constant as the interior stencil.  Twice-differenced fields (the
    initial accelerations) stay second-order up to both ends this way,
    whereas plain one-sided stencils degrade the second pass to first order
    at the ends.
    """
    g = node_gradient(f, dx)
    g[0] = f[1] / dx if odd else 0.0
    ghost = 4.0 * f[-1] - 6.0 * f[-2] + 4.0 * f[-3] - f[-4]
    g[-1] = (ghost - f[-2]) / (2.0 * dx)
    return g


def _over_x_even(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """u/x for odd u; the even-parity Richardson value (4w1 - w2)/3 at x=0."""
    out = np.empty_like(u)
    out[1:] = u[1:] / x[1:]
    out[0] = (4.0 * out[1] - out[2]) / 3.0
    return out


def _radial_divergence(u: np.ndarray, u_grad: np.ndarray, x: np.ndarray) -> np.ndarray:
    """(x^2 u)_x / x^2 evaluated as u_x + 2 u/x for odd u.

    The expanded form is used because differencing x^2 u and dividing by x^2
    amplifies the truncation error to O(1) on the first few nodes.
    """
    return u_grad + 2.0 * _over_x_even(u, x)


def _vacuum_profile(init: InitialData) -> bool:
    return init.rho0[-1] <= 1e-14 * max(init.rho_bar0, 1.0)


def _divide_degenerate(rhs: np.ndarray, init: InitialData, grid: Grid) -> np.ndarray:
    """rhs / rho0 with the vacuum strip filled by linear extrapolation.

    Near a continuous vacuum interface the division's truncation error
    amplifies like dx^2/rho0^4 for the twice-differenced second acceleration
    (it diverges like dx^-2 if evaluated all the way to the last interior
    node), so evaluation stops where rho0 falls below rho_bar0 dx^(1/3) and
    the remaining strip is extrapolated.  The strip width vanishes under
    refinement, and the energy quadratures weight it by the vanishing rho0.
    """
    out = np.empty_like(rhs)
    if not _vacuum_profile(init):
        out[:] = rhs / init.rho0
        return out
    cut = init.rho_bar0 * grid.dx ** (1.0 / 3.0)
    valid = np.flatnonzero(init.rho0 >= cut)
    if valid.size < 4:
        raise ConfigError("derived accelerations: density degenerate on "
                          "nearly the whole domain")
    k = int(valid[-1])
    out[:k + 1] = rhs[:k + 1] / init.rho0[:k + 1]
    slope = (out[k] - out[k - 1]) / grid.dx
    tail = np.arange(1, out.size - k)
    out[k + 1:] = out[k] + slope * grid.dx * tail
    return out


def derive_u1(init: InitialData, params: MaterialParams, grid: Grid) -> np.ndarray:
    """Initial acceleration from the momentum balance evaluated at t = 0.

    u1 = [ (2 mu + lam) ((x^2 u0)_x / x^2)_x - (rho0^gamma)_x ] / rho0.
    For vacuum-touching profiles the last node is filled by linear
    extrapolation since the division by rho0 degenerates there.
    """
    if init.rho_bar0 == 0.0:
        return np.zeros_like(init.rho0)
    if np.any(init.rho0[:-1] <= 0.0):
        raise ConfigError("derive_u1: interior density vanishes; malformed profile")
    x, dx = grid.nodes, grid.dx
    u0x = node_gradient_parity(init.u0, dx, odd=True)
    h = _radial_divergence(init.u0, u0x, x)
    rhs = (params.longitudinal * node_gradient_parity(h, dx, odd=False)
           - node_gradient_parity(init.rho0**params.gamma, dx, odd=False))
    u1 = _divide_degenerate(rhs, init, grid)
    u1[0] = 0.0  # center stagnation: v(0, t) = 0 for all t pins v_t(0, 0)
    return u1


def derive_u2(init: InitialData, params: MaterialParams, grid: Grid) -> np.ndarray:
    """Second time derivative of the velocity at t = 0, built from u0 and u1."""
    if init.u1 is None:
        raise ConfigError("derive_u2: u1 must be derived first")
    if init.rho_bar0 == 0.0:
        return np.zeros_like(init.rho0)
    x, dx = grid.nodes, grid.dx
    u0, u1, rho0 = init.u0, init.u1, init.rho0
    u0x = node_gradient_parity(u0, dx, odd=True)
    u1x = node_gradient_parity(u1, dx, odd=True)
    h0 = _radial_divergence(u0, u0x, x)
    h1 = _radial_divergence(u1, u1x, x)
    u0_over_x = _over_x_even(u0, x)
    rhs = (params.longitudinal * node_gradient_parity(h1, dx, odd=False)
           + params.gamma * node_gradient_parity(rho0**params.gamma * h0, dx, odd=False)
           - params.longitudinal * node_gradient_parity(
               u0x**2 + 2.0 * u0_over_x**2, dx, odd=False))
    u2 = _divide_degenerate(rhs, init, grid)
    u2 += 2.0 * u0_over_x * u1
    u2[0] = 0.0  # center stagnation, as in derive_u1
    return u2


def compatibility_residual(init: InitialData, params: MaterialParams, grid: Grid) -> float:
    """Stress balance defect of the initial data at the interface x = 1.

    Returns rho0(1)^gamma - [(2 mu + lam) u0_x(1) + 2 lam u0(1)] with a
    one-sided second-order derivative.  Zero means the data start on the
    free-boundary stress balance.
    """
    dx = grid.dx
    u0x1 = (3.0 * init.u0[-1] - 4.0 * init.u0[-2] + init.u0[-3]) / (2.0 * dx)
    return float(init.rho0[-1] ** params.gamma
                 - (params.longitudinal * u0x1 + 2.0 * params.lam * init.u0[-1]))


def construct_compatible_linear_velocity(rho_bar: float, params: MaterialParams) -> float:
    """Slope a such that u0 = a*x balances the interface stress exactly."""
    if rho_bar < 0:
        raise ConfigError("rho_bar: must be >= 0")
    return float(rho_bar**params.gamma / (2.0 * params.mu + 3.0 * params.lam))


# ---------------------------------------------------------------------------
# Current density
# ---------------------------------------------------------------------------

def mass_weight_cells(init: InitialData, grid: Grid) -> np.ndarray:
    """Cell field x^2 rho0, fixed in time; the Lagrangian mass per unit dx."""
    return grid.x2_cells * cell_mean(init.rho0)


def density_field(state: State, init: InitialData, grid: Grid) -> np.ndarray:
    """Current density per cell, x^2 rho0 / (r^2 r_x) in the paired cell form.

    The center cell needs no special case: the cubic pairing reduces to
    rho0 / r_x^3 there, which is the even-symmetry limit of x^2/r^2 * 1/r_x.
    """
    j = jacobian_cells(state.r, grid.dx)
    if np.any(j <= 0.0):
        raise MeshTanglingError(f"density_field at t={state.t}: r_x <= 0 on some cell",
                                last_good=None)
    return mass_weight_cells(init, grid) / j
