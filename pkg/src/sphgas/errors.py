"""Exception types shared across the package."""
from __future__ import annotations


class SphgasError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SphgasError):
    """Invalid configuration or profile data; reported with a field path."""


class MeshTanglingError(SphgasError):
    """The particle map lost monotonicity (r_x <= 0 on some cell).

    Carries the last admissible state so a fatal run can dump a usable
    snapshot for post-mortem inspection.
    """

    def __init__(self, message: str, last_good=None):
        super().__init__(message)
        self.last_good = last_good
