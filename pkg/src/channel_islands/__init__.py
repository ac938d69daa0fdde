"""Steady Euler flows in perturbed periodic channels: expansions and island topology."""
from .errors import *  # noqa: F401,F403
from .geometry import BoundaryShape, FourierSeries, MappedGrid, build_grid, membership_Bprime
from .nonlinearity import Nonlinearity
from .operators import (
    LinearOperator,
    ScalarField,
    assemble_helmholtz,
    assemble_laplacian,
    smallest_eigenvalue,
    solve_dirichlet,
)
from .steady import (
    ShearProfile,
    check_stability,
    profile_for_shape,
    solve_perturbed,
    solve_shear,
    solve_steady,
)

__version__ = "0.1.0"
