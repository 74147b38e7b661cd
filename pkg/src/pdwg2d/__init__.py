"""Primal-dual weak Galerkin (PDWG) finite element solver for 2D
convection-diffusion problems on triangular meshes.

The discretization couples a discontinuous piecewise-polynomial primal
variable with a weak-function Lagrange multiplier through discrete weak
gradient / weak diffusion operators, yielding a sparse symmetric
saddle-point system.  The :mod:`pdwg2d.harness` module drives uniform
refinement studies and reports observed convergence orders.
"""

from pdwg2d.mesh import BoundaryTag, DomainId, Mesh, coarse_mesh, refine_uniform
from pdwg2d.coefficients import Coefficients, ScalarField
from pdwg2d.solver import SingularSystemError, SolveReport, solve
from pdwg2d.cases import NoExactSolutionError, UnknownCaseError, catalog, get_case
from pdwg2d.harness import RunConfig, run_convergence

__all__ = [
    "BoundaryTag",
    "Coefficients",
    "DomainId",
    "Mesh",
    "NoExactSolutionError",
    "RunConfig",
    "ScalarField",
    "SingularSystemError",
    "SolveReport",
    "UnknownCaseError",
    "catalog",
    "coarse_mesh",
    "get_case",
    "refine_uniform",
    "run_convergence",
    "solve",
]

__version__ = "0.1.0"
