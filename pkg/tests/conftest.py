import numpy as np
import pytest

from sphgas.core import (
    MaterialParams,
    ProfileSpec,
    State,
    build_grid,
    derive_u1,
    derive_u2,
    sample_profile,
)


@pytest.fixture
def params():
    return MaterialParams(mu=1.0, lam=1.0, gamma=2.0)


def jump_setup(n_cells, rho_bar, a, params, with_accel=False):
    """Grid + initial data for a jump profile with linear velocity a*x."""
    grid = build_grid(n_cells)
    vel = "zero" if a == 0.0 else "linear"
    init = sample_profile(ProfileSpec.jump(rho_bar, velocity=vel, a=a), grid, params)
    if with_accel:
        u1 = derive_u1(init, params, grid)
        init = init.with_accelerations(u1, np.zeros_like(u1))
        init = init.with_accelerations(u1, derive_u2(init, params, grid))
    return grid, init


def initial_state(grid, init):
    return State.initial(grid, init)
