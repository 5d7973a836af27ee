from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ..constraints import ConstraintKind, ConstraintSet
from ..exceptions import OrdSparseMisconfigured
from ..problem import Problem
from ..prox import prox_l1, prox_l1_isotone, prox_log, prox_lp
from ..regularizer import Family
from .base import BaseSolver, Proposal, SolverConfig, SolverState


class ProxKind(Enum):
    L1 = "L1"
    LpPower = "LpPower"
    LogPen = "LogPen"
    L1Isotone = "L1Isotone"


@dataclass(frozen=True)
class ProxSpec:
    """ The penalty ``P`` of a nonmonotone proximal gradient baseline:

    * ``L1``: ``lam ||z||_1``
    * ``LpPower``: ``lam sum |z_i|**p``
    * ``LogPen``: ``lam sum log(1 + |z_i| / eps)``
    * ``L1Isotone``: ``lam ||z||_1`` plus the indicator of ``{z: |z| in Omega}`` for an ordered ``Omega``
    """

    kind: ProxKind
    lam: float
    p: Optional[float] = None
    eps: Optional[float] = None
    constraint: Optional[ConstraintSet] = None

    @classmethod
    def from_problem(cls, problem: Problem) -> "ProxSpec":
        """ Infers the penalty from the regularizer and the constraint set of ``problem``.

        :raise OrdSparseMisconfigured: For combinations without an exact proximal map, which need the DMA solver.
        """
        family = problem.reg.family
        kind = problem.constraint.kind

        if family == Family.linear and kind == ConstraintKind.nonneg:
            return cls(ProxKind.L1, problem.lam)
        if family == Family.linear and problem.constraint.is_ordered:
            return cls(ProxKind.L1Isotone, problem.lam, constraint=problem.constraint)
        if family == Family.lp and kind == ConstraintKind.nonneg:
            return cls(ProxKind.LpPower, problem.lam, p=problem.reg.p)
        if family == Family.log and kind == ConstraintKind.nonneg:
            return cls(ProxKind.LogPen, problem.lam, eps=problem.reg.eps)

        raise OrdSparseMisconfigured(OrdSparseMisconfigured.UNSUPPORTED_MODEL.format(
            "NPG", problem.reg.name, kind.value
        ))

    def apply(self, z: np.ndarray, gamma: float) -> np.ndarray:
        """ Returns the proximal map of ``gamma * P`` at ``z``.
        """
        if self.kind == ProxKind.L1Isotone:
            return prox_l1_isotone(z, gamma * self.lam, self.constraint)
        if self.kind == ProxKind.L1 or self.lam == 0:
            return np.asarray(prox_l1(z, gamma * self.lam), dtype=float)
        if self.kind == ProxKind.LpPower:
            return np.asarray(prox_lp(z, gamma, self.lam, self.p), dtype=float)
        return np.asarray(prox_log(z, gamma, self.lam, self.eps), dtype=float)


class NPGSolver(BaseSolver):
    """ The nonmonotone proximal gradient baselines, ``x = prox_{gamma P}(x^k - gamma grad f(x^k))``.

    The penalty is inferred from the problem, see :meth:`ProxSpec.from_problem`. The stepsize rule and the
    acceptance test are the ones of :class:`DMASolver <ordsparse.solver.DMASolver>`, the ``eta`` settings
    are ignored and ``1/gamma`` is recorded as ``eta``.
    """

    def check_problem(self, problem: Problem):
        super().check_problem(problem)
        ProxSpec.from_problem(problem)

    def propose(self, state: SolverState, gamma: float, problem: Problem, config: SolverConfig) -> Proposal:
        spec = ProxSpec.from_problem(problem)
        x = spec.apply(state.x - gamma * state.grad, gamma)
        v = np.asarray(problem.reg.psi(np.abs(x)), dtype=float).reshape(x.shape)

        return Proposal(x=x, v=v, eta=1 / gamma)


def npg_solve(problem: Problem, x0=None, monitor=None, **settings):
    """ Shortcut running :class:`NPGSolver` with the ``settings`` on the ``problem``.
    """
    return NPGSolver(**settings).solve(problem, x0, monitor=monitor)
