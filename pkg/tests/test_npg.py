import numpy as np
import pytest

from ordsparse import ConstraintSet, NPGSolver, Problem, Regularizer, TerminationReason, npg_solve
from ordsparse.exceptions import OrdSparseMisconfigured
from ordsparse.experiments.synthetic import sorted_initial_point
from ordsparse.solver import ProxKind, ProxSpec
from common import random_least_squares


def test_least_squares_one_step():
    b = np.array([3.0, -1.0, 0.5])
    problem = Problem.least_squares(np.eye(3), b, Regularizer.linear(), 0, "nonneg")

    result = NPGSolver(keep_iterates=True).solve(problem)

    np.testing.assert_array_equal(result.iterates[1], b)
    assert result.records[1].gamma == 1
    assert result.records[1].eta == 1
    assert result.reason == TerminationReason.converged
    np.testing.assert_array_equal(result.x, b)


@pytest.mark.parametrize(["reg", "constraint", "kind"], [
    (Regularizer.linear(), "nonneg", ProxKind.L1),
    (Regularizer.linear(), "isotone", ProxKind.L1Isotone),
    (Regularizer.lp(0.5), "nonneg", ProxKind.LpPower),
    (Regularizer.log(0.5), "nonneg", ProxKind.LogPen),
])
def test_prox_spec_inference(reg, constraint, kind):
    problem = Problem.least_squares(np.eye(4), np.ones(4), reg, 0.1, constraint)
    spec = ProxSpec.from_problem(problem)

    assert spec.kind == kind
    assert spec.lam == 0.1


def test_prox_spec_block_isotone():
    problem = Problem.least_squares(np.eye(4), np.ones(4), Regularizer.linear(), 0.1, "block-isotone", block_len=2)
    spec = ProxSpec.from_problem(problem)

    assert spec.kind == ProxKind.L1Isotone
    np.testing.assert_allclose(spec.apply(np.array([1, 2, -3, 1]), 1), [1.4, 1.4, -2.9, 0.9])


@pytest.mark.parametrize(["reg", "constraint"], [
    (Regularizer.lp(0.5), ConstraintSet.isotone(4)),
    (Regularizer.log(0.5), ConstraintSet.isotone(4)),
    (Regularizer.lp(0.3), ConstraintSet.block_isotone(4, 2)),
    (Regularizer.linear(), ConstraintSet.custom(lambda v: np.maximum(v, 0), 4)),
])
def test_unsupported_models(reg, constraint):
    problem = Problem(Problem.least_squares(np.eye(4), np.ones(4), reg, 0.1).smooth, reg, 0.1, constraint)

    with pytest.raises(OrdSparseMisconfigured) as excinfo:
        NPGSolver().solve(problem)

    assert "NPG" in str(excinfo.value)


@pytest.mark.parametrize("reg", [Regularizer.linear(), Regularizer.lp(0.5), Regularizer.log(0.5)])
def test_descent(reg):
    A, b = random_least_squares(10, 16, seed=2)
    problem = Problem.least_squares(A, b, reg, 0.05, "nonneg")
    x0 = sorted_initial_point(16, 2)

    result = npg_solve(problem, x0, max_iters=500)

    assert result.objective < problem.full_objective(x0)
    assert all(record.eta == pytest.approx(1 / record.gamma) for record in result.records[1:])
    assert result.solver == "npg_solver"
