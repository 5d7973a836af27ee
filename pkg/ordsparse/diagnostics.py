""" Computable optimality certificates and numerical checks of the assumptions the solvers rely on.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from .constraints import ConstraintKind
from .exceptions import DomainError, InfeasiblePointError, OrdSparseMisconfigured
from .problem import Problem
from .regularizer import Regularizer
from .utils import UNBOUNDED, logger


class CoordinateCheck(Enum):
    passed = "pass"
    failed = "fail"
    vacuous = "vacuous"


@dataclass
class StationarityReport:
    """ The fixed point residual ``||v - P(v - mu / eta)||`` at ``v = psi(|x|)``, with the signs ``alpha`` and the
    coefficients ``mu = lam + alpha * grad f(x) * phi'_+(v)`` it was computed from.

    A zero residual certifies the point is stationary in the sense of the reparametrized problem.
    """

    residual: float
    eta_used: float
    alpha: np.ndarray
    mu: np.ndarray
    checks: Optional[List[CoordinateCheck]] = None

    @property
    def all_passed(self) -> Optional[bool]:
        if self.checks is None:
            return None
        return all(check != CoordinateCheck.failed for check in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "residual": self.residual,
            "eta_used": self.eta_used,
            "alpha": self.alpha.tolist(),
            "mu": self.mu.tolist(),
        }
        if self.checks is not None:
            data["checks"] = [check.value for check in self.checks]
            data["failed_coordinates"] = [i for i, check in enumerate(self.checks)
                                          if check == CoordinateCheck.failed]
        return data


def stationarity_signs(x: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """ ``sgn(x_i)`` where ``x_i != 0``, ``-sgn(grad_i)`` where only the gradient is nonzero and ``1`` elsewhere.
    """
    alpha = np.ones_like(x)
    alpha[x < 0] = -1.0
    zero = x == 0
    alpha[zero & (grad > 0)] = -1.0
    return alpha


def psi_opt_residual(pb: Problem, x, eta: float, tol: float = 1e-8) -> StationarityReport:
    """ Evaluates the stationarity residual of ``x`` at ``eta``.

    When the constraint set is the whole orthant, the report also contains the coordinatewise first order checks
    of :func:`check_unconstrained_stationarity` with the tolerance ``tol``.

    :raise InfeasiblePointError: If ``|x|`` is not in the constraint set.
    :raise DomainError: If ``eta`` isn't positive.
    """
    if not eta > 0:
        raise DomainError(f"eta={eta} must be positive.")

    x = np.asarray(x, dtype=float)
    if pb.full_objective(x) is UNBOUNDED:
        raise InfeasiblePointError("|x| is not in the constraint set.", point=x)

    grad = pb.grad_smooth(x)
    alpha = stationarity_signs(x, grad)
    v = np.asarray(pb.reg.psi(np.abs(x)), dtype=float).reshape(x.shape)
    mu = pb.lam + alpha * grad * np.asarray(pb.reg.phi_right_deriv(v), dtype=float)

    residual = float(np.linalg.norm(v - pb.constraint.project(v - mu / eta)))

    checks = None
    if pb.constraint.kind == ConstraintKind.nonneg:
        checks = check_unconstrained_stationarity(pb, x, tol)

    return StationarityReport(residual=residual, eta_used=float(eta), alpha=alpha, mu=mu, checks=checks)


def check_unconstrained_stationarity(pb: Problem, x, tol: float) -> List[CoordinateCheck]:
    """ Coordinatewise first order conditions without order constraints:

    * ``|lam psi'(|x_i|) sgn(x_i) + grad_i f(x)| <= tol`` for ``x_i != 0``
    * ``|grad_i f(x)| <= lam psi'_+(0) + tol`` for ``x_i = 0``, vacuous when ``psi'_+(0)`` is unbounded

    :raise OrdSparseMisconfigured: If the problem has an ordering constraint.
    """
    if pb.constraint.kind != ConstraintKind.nonneg:
        raise OrdSparseMisconfigured(
            f"The unconstrained first order conditions don't apply to the constraint {pb.constraint!r}."
        )
    if not tol > 0:
        raise DomainError(f"tol={tol} must be positive.")

    x = np.asarray(x, dtype=float)
    grad = pb.grad_smooth(x)
    slope_at_zero = pb.reg.psi_right_deriv_at_zero()

    checks = []
    for x_i, grad_i in zip(x.tolist(), grad.tolist()):
        if x_i != 0:
            value = pb.lam * pb.reg.psi_deriv(abs(x_i)) * np.sign(x_i) + grad_i
            passed = abs(value) <= tol
        elif slope_at_zero is UNBOUNDED:
            checks.append(CoordinateCheck.vacuous)
            continue
        else:
            passed = abs(grad_i) <= pb.lam * slope_at_zero + tol
        checks.append(CoordinateCheck.passed if passed else CoordinateCheck.failed)

    return checks


def finite_diff_gradient_check(pb: Problem, x, h: float = 1e-6) -> float:
    """ Compares :meth:`Problem.grad_smooth <ordsparse.problem.Problem.grad_smooth>` against central differences
    of the smooth term. Returns the largest absolute deviation relative to ``max(1, ||grad||_inf)``.

    :raise DomainError: If ``h`` isn't positive.
    """
    if not h > 0:
        raise DomainError(f"The difference step h={h} must be positive.")

    x = np.asarray(x, dtype=float)
    grad = pb.grad_smooth(x)

    differences = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        differences[i] = (pb.smooth.value(x + step) - pb.smooth.value(x - step)) / (2 * h)

    return float(np.max(np.abs(differences - grad), initial=0.0) / max(1.0, float(np.max(np.abs(grad), initial=0.0))))


def descent_lemma_violations(reg: Regularizer, draws: int = 10_000, seed: int = 0, slack: float = 1e-10) -> int:
    """ Counts random draws ``(s, t, b, gamma)`` violating
    ``g(s) <= g(t) + g'_+(t)(s - t) + L/2 (s - t)**2`` for ``g(t) = (phi(t) - b)**2 / (2 gamma)`` on ``[0, a]``,
    with ``L`` from :meth:`Regularizer.majorization_constant <ordsparse.regularizer.Regularizer.majorization_constant>`.
    The slack is relative to the magnitude of the right hand side.
    """
    rng = np.random.default_rng(seed)
    violations = 0

    for _ in range(draws):
        a = rng.uniform(0.1, 3.0)
        s, t = rng.uniform(0.0, a, size=2)
        b = rng.uniform(-3.0, 3.0)
        gamma = 10 ** rng.uniform(-2, 2)

        L = reg.majorization_constant(a, abs(b), gamma)
        g_s = (reg.phi(s) - b) ** 2 / (2 * gamma)
        g_t = (reg.phi(t) - b) ** 2 / (2 * gamma)
        g_deriv_t = (reg.phi(t) - b) * reg.phi_right_deriv(t) / gamma

        bound = g_t + g_deriv_t * (s - t) + L / 2 * (s - t) ** 2
        if g_s > bound + slack * max(1.0, abs(bound)):
            violations += 1

    if violations:
        logger.warning("%s of %s draws violate the majorization inequality for %r", violations, draws, reg)

    return violations
