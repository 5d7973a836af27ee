""" The doubly majorized algorithm.

Each iteration majorizes the least squares term by a proximal linearization with stepsize ``gamma`` and then,
in the variables ``v = psi(|x|)``, majorizes the resulting separable term once more by a quadratic with
curvature ``eta``. The inner subproblem is a Euclidean projection onto ``psi(Omega)``.
"""
from typing import Tuple

import numpy as np

from ..constraints import ConstraintSet
from ..exceptions import LineSearchError
from ..problem import Problem
from ..prox import sign
from ..regularizer import Family, Regularizer
from ..utils import logger
from .base import BaseSolver, EtaMode, Proposal, SolverConfig, SolverState

#: Cap on the number of ``eta`` increases in one inner search
MAX_ETA_TRIALS = 1000

#: Relative rounding slack of the inner acceptance test
SURROGATE_SLACK = 1e-13


def g_right_deriv(v, y, gamma: float, reg: Regularizer):
    """ Right derivative of ``g(v) = (phi(v) - y)**2 / (2 gamma)``, i.e. ``(phi(v) - y) phi'_+(v) / gamma``.

    :raise DomainError: If ``v`` is negative.
    """
    y = np.asarray(y, dtype=float)
    return (np.asarray(reg.phi(v)) - y) * np.asarray(reg.phi_right_deriv(v)) / gamma


def surrogate_value(v: np.ndarray, y: np.ndarray, gamma: float, lam: float, reg: Regularizer) -> float:
    """ ``G(v) = lam * sum(v) + sum((phi(v) - y)**2) / (2 gamma)``, the majorized objective in the ``v`` variables.
    """
    return lam * float(np.sum(v)) + float(np.sum((np.asarray(reg.phi(v)) - y) ** 2)) / (2 * gamma)


def step1b(v_k: np.ndarray, coeffs: np.ndarray, eta: float, cs: ConstraintSet) -> np.ndarray:
    """ Minimizes ``eta/2 ||v - v_k||**2 + <coeffs, v - v_k>`` over ``psi(Omega)``, which after completing the
    square is the projection of ``v_k - coeffs / eta``.
    """
    return cs.project(v_k - coeffs / eta)


def step1b_linear(y: np.ndarray, gamma: float, lam: float, cs: ConstraintSet) -> np.ndarray:
    """ :func:`step1b` for ``psi(t) = t`` and ``eta = 1/gamma`` in closed form, ``P(|y| - gamma lam)``.
    Evaluated in the same order as the proximal map of the l1 baseline, so both round alike.
    """
    return cs.project(y - gamma * lam)


def eta_linesearch(state: SolverState, gamma: float, config: SolverConfig,
                   problem: Problem) -> Tuple[np.ndarray, float, int]:
    """ Runs the inner search: increases ``eta`` by the factor ``1/tau`` until the surrogate ``G`` doesn't
    increase.

    :return: The accepted ``v``, the accepted ``eta`` and the number of trials.
    :raise LineSearchError: After ``MAX_ETA_TRIALS`` increases.
    """
    reg, lam = problem.reg, problem.lam
    y = np.abs(state.x - gamma * state.grad)
    coeffs = lam + g_right_deriv(state.v, y, gamma, reg)

    reference = surrogate_value(state.v, y, gamma, lam, reg)
    threshold = reference + SURROGATE_SLACK * max(1.0, abs(reference))

    inverse_gamma = config.eta_mode == EtaMode.inverse_gamma
    eta = 1 / gamma if inverse_gamma else config.eta_init

    for trial in range(MAX_ETA_TRIALS + 1):
        if trial == 0 and inverse_gamma and reg.family == Family.linear:
            v_tilde = step1b_linear(y, gamma, lam, problem.constraint)
        else:
            v_tilde = step1b(state.v, coeffs, eta, problem.constraint)
        if surrogate_value(v_tilde, y, gamma, lam, reg) <= threshold:
            return v_tilde, eta, trial + 1
        eta /= config.tau

    raise LineSearchError(
        "The inner search on eta didn't accept, the surrogate never decreased.",
        extra_info={"iteration": state.k, "gamma": gamma, "eta": eta}
    )


class DMASolver(BaseSolver):
    """ The doubly majorized algorithm for any supported regularizer and constraint set.

    The stepsize ``gamma`` is proposed by the Barzilai-Borwein rule and reduced by the nonmonotone line search.
    For every trial ``gamma`` the inner search on ``eta`` restarts, from ``eta_init`` or from ``1/gamma``
    with ``eta_mode = inverse_gamma``.
    For ``psi(t) = t`` and ``eta = 1/gamma`` the iteration is the nonmonotone proximal gradient method
    for the order constrained l1 model.
    """

    def propose(self, state: SolverState, gamma: float, problem: Problem, config: SolverConfig) -> Proposal:
        v_tilde, eta, trials = eta_linesearch(state, gamma, config, problem)
        if trials > 1:
            logger.debug("k=%s: eta search accepted eta=%.3e after %s trials", state.k, eta, trials)

        signs = sign(state.x - gamma * state.grad)
        x = signs * np.asarray(problem.reg.phi(v_tilde), dtype=float)

        return Proposal(x=x, v=v_tilde, eta=eta)


def dma_solve(problem: Problem, x0=None, monitor=None, **settings):
    """ Shortcut running :class:`DMASolver` with the ``settings`` on the ``problem``.
    """
    return DMASolver(**settings).solve(problem, x0, monitor=monitor)
