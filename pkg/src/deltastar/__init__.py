"""Lower bounds and numerical checks for delta-interactions supported on stars of rays."""

from .bounds import (
    BoundResult,
    NoAdmissibleSplit,
    SplitSolution,
    angle_bound,
    brute_force_star_bound,
    lines_bound,
    llp_bound,
    star_bound,
    wedge_lower_bound,
)
from .discretization import (
    DiscreteForm,
    Grid,
    TraceQuadrature,
    assemble,
    build_grid,
    form_value,
    trace_quadrature,
)
from .eigensolver import SpectrumEstimate, count_below, lowest_eigenpairs
from .geometry import (
    DomainError,
    RayConfig,
    WedgeDecomposition,
    angle_config,
    lines_config,
    star_config,
    wedges_of,
)

__version__ = "0.1.0"

__all__ = [
    "SpectrumEstimate",
    "count_below",
    "lowest_eigenpairs",
    "BoundResult",
    "NoAdmissibleSplit",
    "SplitSolution",
    "angle_bound",
    "brute_force_star_bound",
    "lines_bound",
    "llp_bound",
    "star_bound",
    "wedge_lower_bound",
    "DiscreteForm",
    "Grid",
    "TraceQuadrature",
    "assemble",
    "build_grid",
    "form_value",
    "trace_quadrature",
    "DomainError",
    "RayConfig",
    "WedgeDecomposition",
    "angle_config",
    "lines_config",
    "star_config",
    "wedges_of",
]
