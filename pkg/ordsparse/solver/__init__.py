from .base import BaseSolver, SolverConfig, SolverState, EtaMode, Proposal, bb_stepsize
from .dma import DMASolver, dma_solve, g_right_deriv, step1b, step1b_linear, eta_linesearch, surrogate_value
from .npg import NPGSolver, npg_solve, ProxSpec, ProxKind

__all__ = ["BaseSolver", "SolverConfig", "SolverState", "EtaMode", "Proposal", "bb_stepsize",
           "DMASolver", "dma_solve", "g_right_deriv", "step1b", "step1b_linear", "eta_linesearch", "surrogate_value",
           "NPGSolver", "npg_solve", "ProxSpec", "ProxKind"]
