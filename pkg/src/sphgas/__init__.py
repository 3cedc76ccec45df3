"""Simulator and invariant checker for spherically symmetric free-boundary
viscous gas flow in Lagrangian coordinates, with both density-jump and
physical-vacuum gas-vacuum interfaces."""

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
from .energy import (
    InitialEnergies,
    dissipation_rate,
    energy_identity_residual,
    initial_energies,
    instantaneous_energy,
    localized_energies,
    smallness_report,
)
from .diagnostics import BoundCertificate, certify_run, g_diagnostic, pointwise_bounds
from .errors import ConfigError, MeshTanglingError, SphgasError
from .stepper import Monitors, RunResult, StepConfig, run, step
from .cli import RunConfig, load_config, read_series, write_series

__version__ = "0.1.0"
