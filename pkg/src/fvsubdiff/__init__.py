"""Finite volume element / discontinuous Galerkin solver for time-fractional subdiffusion."""

from .dg_stepper import DGSolution, DGStepper, TimeMesh, eval_solution, graded_mesh, run
from .error_norms import ErrorReport, discrete_max_error, l2_error_at, rate_table
from .errors import (
    FvSubdiffError,
    GeometryError,
    InvalidParameterError,
    OrderingError,
    OutOfDomainError,
    ResourceLimitError,
    SingularityError,
    SolverError,
)
from .fractional_kernel import FracKernel, jump_moment, kernel_moment, omega, slope_moment
from .fv_assembly import FvOperators, assemble_fv_mass, assemble_load, assemble_stiffness, build_operators, elliptic_projection
from .mesh import DualMesh, PrimalMesh, build_dual_mesh, build_uniform_mesh, read_mesh, write_mesh
from .problems import ManufacturedProblem, paper_problem, smooth_problem, zero_problem

__version__ = "0.1.0"

__all__ = [
    "DGSolution",
    "DGStepper",
    "DualMesh",
    "ErrorReport",
    "FracKernel",
    "FvOperators",
    "FvSubdiffError",
    "GeometryError",
    "InvalidParameterError",
    "ManufacturedProblem",
    "OrderingError",
    "OutOfDomainError",
    "PrimalMesh",
    "ResourceLimitError",
    "SingularityError",
    "SolverError",
    "TimeMesh",
    "assemble_fv_mass",
    "assemble_load",
    "assemble_stiffness",
    "build_dual_mesh",
    "build_operators",
    "build_uniform_mesh",
    "discrete_max_error",
    "elliptic_projection",
    "eval_solution",
    "graded_mesh",
    "jump_moment",
    "kernel_moment",
    "l2_error_at",
    "omega",
    "paper_problem",
    "rate_table",
    "read_mesh",
    "run",
    "slope_moment",
    "smooth_problem",
    "write_mesh",
    "zero_problem",
]
