"""Python bindings for wavelab."""

from ._core import (
    ConfigError,
    DomainError,
    F_kernel,
    Params,
    SolverError,
    __version__,
    boundary_alpha,
    boundary_time,
    compat_order,
    evolve_radial,
    from_penrose,
    hardy_constants,
    omega_physical,
    profiles,
    radial_grid,
    run_config,
    sample_profile,
    to_penrose,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "F_kernel",
    "Params",
    "SolverError",
    "__version__",
    "boundary_alpha",
    "boundary_time",
    "compat_order",
    "evolve_radial",
    "from_penrose",
    "hardy_constants",
    "omega_physical",
    "profiles",
    "radial_grid",
    "run_config",
    "sample_profile",
    "to_penrose",
]
