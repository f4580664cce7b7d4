"""Desk-scale numerical laboratory for the indefinite subhomogeneous problem

    -div(|grad u|^{p-2} grad u) = lam * u^{p-1} + a(x) * u^{q-1},  u >= 0,

with 1 < q < p and a sign-changing weight a(x), under Dirichlet or Neumann
boundary conditions on an interval or rectangle. Ground states and second
solutions are computed by constrained energy minimization; positivity
thresholds, eigenvalue-type thresholds, and dead-core formation are verified
as executable properties.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateDomainError,
    InitializationError,
    NonFiniteError,
    ProjectionError,
    RegimeError,
    SignChangeError,
)
from .fields import Field
from .grids import Grid, build_grid
from .weights import (
    DiskBump2D,
    NodalFile,
    TwoBump1D,
    Weight,
    build_weight,
    scale_negative_part,
    weight_from_values,
)
from .solver import (
    PositivityReport,
    SolveOptions,
    SolveReport,
    ground_state,
    minimize_on_S,
    positivity_report,
    project_S,
    second_solution,
)
from .spectrum import (
    EigenReport,
    lambda_lower_star,
    lambda_star,
    principal_eigen,
)
from .functionals import (
    EnergyBreakdown,
    Problem,
    dirichlet_energy,
    energy,
    grad_E,
    grad_I,
    hidden_convex_midpoint,
    p_mass,
    picone_gap,
    power_mean_gap,
    ray_max_point,
    ray_max_value,
    residual_norm,
    weighted_q_mass,
)

__all__ = [
    "ConfigError",
    "EigenReport",
    "PositivityReport",
    "SolveOptions",
    "SolveReport",
    "ground_state",
    "lambda_lower_star",
    "lambda_star",
    "minimize_on_S",
    "positivity_report",
    "principal_eigen",
    "project_S",
    "second_solution",
    "DegenerateDomainError",
    "DiskBump2D",
    "EnergyBreakdown",
    "Field",
    "Grid",
    "InitializationError",
    "NodalFile",
    "NonFiniteError",
    "Problem",
    "ProjectionError",
    "RegimeError",
    "SignChangeError",
    "TwoBump1D",
    "Weight",
    "build_grid",
    "build_weight",
    "dirichlet_energy",
    "energy",
    "grad_E",
    "grad_I",
    "hidden_convex_midpoint",
    "p_mass",
    "picone_gap",
    "power_mean_gap",
    "ray_max_point",
    "ray_max_value",
    "residual_norm",
    "scale_negative_part",
    "weight_from_values",
    "weighted_q_mass",
]
