from ._ordsparse import OrdSparse
from .constraints import ConstraintSet, ConstraintKind, project_isotone_nonneg, project_block_isotone, \
    project_psi_omega
from .problem import LeastSquares, Problem
from .regularizer import Regularizer, Family
from .result import RunResult, IterationRecord, TerminationReason
from .solver import BaseSolver, DMASolver, NPGSolver, SolverConfig, dma_solve, npg_solve


__all__ = ["OrdSparse", "ConstraintSet", "ConstraintKind", "project_isotone_nonneg", "project_block_isotone",
           "project_psi_omega", "LeastSquares", "Problem", "Regularizer", "Family", "RunResult", "IterationRecord",
           "TerminationReason", "BaseSolver", "DMASolver", "NPGSolver", "SolverConfig", "dma_solve", "npg_solve"]
__version__ = "0.1.0"
