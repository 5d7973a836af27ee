import math
import sys

import numpy as np
import pytest

from ordsparse import OrdSparse, DMASolver, NPGSolver, RunResult, IterationRecord, TerminationReason
from ordsparse.constraints import ConstraintKind
from ordsparse.exceptions import DomainError, OrdSparseMisconfigured
from ordsparse.experiments.synthetic import ALGORITHMS, CS_TRIPLES, TIME_GRID_SAMPLES, gen_cs_instance, \
    sorted_initial_point, sort_by_magnitude, cs_problem, error_curves, average_error_curves, default_lambda, \
    run_cs_instance, run_cs_benchmark, tune_lambda, TUNING_TOL_STEP
from common import SLOW, DESK


def trace(metrics, times):
    records = [IterationRecord(k, 0.0, math.nan, math.nan, math.nan, time, metric)
               for k, (metric, time) in enumerate(zip(metrics, times))]
    return RunResult(x=np.zeros(1), records=records, reason=TerminationReason.converged)


def test_gen_cs_instance_zero():
    instance = gen_cs_instance(4, 2, 0, 0, seed=3)

    np.testing.assert_array_equal(instance.x_true, np.zeros(4))
    np.testing.assert_array_equal(instance.b, np.zeros(2))


def test_gen_cs_instance():
    instance = gen_cs_instance(64, 20, 8, 0.1, seed=5)

    assert instance.shape == (64, 20, 8)
    np.testing.assert_allclose(np.linalg.norm(instance.A, axis=0), 1, atol=1e-12)

    magnitudes = np.abs(instance.x_true)
    assert np.all(magnitudes[:-1] >= magnitudes[1:])
    assert np.count_nonzero(instance.x_true[8:]) == 0

    again = gen_cs_instance(64, 20, 8, 0.1, seed=5)
    np.testing.assert_array_equal(again.A, instance.A)
    np.testing.assert_array_equal(again.b, instance.b)
    np.testing.assert_array_equal(again.x_true, instance.x_true)

    assert not np.array_equal(gen_cs_instance(64, 20, 8, 0.1, seed=6).A, instance.A)


@pytest.mark.parametrize(["n", "m", "s", "sigma"], [(4, 2, 5, 0), (4, 0, 1, 0), (4, 2, 1, -1), (4, 2, -1, 0)])
def test_gen_cs_instance_errors(n, m, s, sigma):
    with pytest.raises(DomainError):
        gen_cs_instance(n, m, s, sigma, seed=0)


def test_sorted_initial_point():
    x0 = sorted_initial_point(12, 0)
    np.testing.assert_array_equal(x0, sorted_initial_point(12, 0))
    assert np.all(np.abs(x0[:-1]) >= np.abs(x0[1:]))

    blocks = np.abs(sorted_initial_point(12, 0, block_len=4)).reshape(3, 4)
    assert np.all(blocks[:, :-1] >= blocks[:, 1:])

    with pytest.raises(DomainError):
        sorted_initial_point(12, 0, block_len=5)

    np.testing.assert_array_equal(sort_by_magnitude([1, -3, 2]), [-3, 2, 1])


def test_algorithms():
    assert set(ALGORITHMS) == {"DMA_lp", "DMA_log", "NPG_lp", "NPG_L1c", "NPG_L1", "NPG_log"}
    assert CS_TRIPLES["small"][:3] == (2560, 540, 180)
    assert CS_TRIPLES["desk"][:3] == DESK

    instance = gen_cs_instance(16, 8, 2, 0.1, seed=0)

    problem = cs_problem(instance, ALGORITHMS["NPG_L1c"], 0.1)
    assert problem.reg.name == "l1"
    assert problem.constraint.kind == ConstraintKind.isotone
    assert ALGORITHMS["NPG_L1c"].solver is NPGSolver

    problem = cs_problem(instance, ALGORITHMS["DMA_log"], 0.1, eps=0.25)
    assert problem.reg.eps == 0.25
    assert ALGORITHMS["DMA_log"].solver is DMASolver

    assert default_lambda(ALGORITHMS["DMA_log"], 1, 2) == 2
    assert default_lambda(ALGORITHMS["NPG_L1"], 1, 2) == 1


def test_error_curves():
    curves = error_curves({
        "first": trace([5, 3, 4, 2], [0, 1, 2, 3]),
        "second": trace([5, 4, 1.5], [0, 0.5, 1.5]),
    })

    first, second = curves["first"], curves["second"]
    assert first.e_r_min == second.e_r_min == 1.5

    np.testing.assert_allclose(first.values, [1, 1.5 / 3.5, 1.5 / 3.5, 0.5 / 3.5])
    np.testing.assert_allclose(second.values, [1, 2.5 / 3.5, 0])

    np.testing.assert_allclose(first.at([0, 0.99, 1, 2.5, 10]),
                               [1, 1, 1.5 / 3.5, 1.5 / 3.5, 0.5 / 3.5])
    assert second.at(10)[0] == 0
    assert np.isnan(trace_starting_late().at(0.5)[0])


def trace_starting_late():
    return error_curves({"late": trace([2, 1], [1, 2])})["late"]


def test_error_curves_errors():
    with pytest.raises(DomainError):
        error_curves({})

    with pytest.raises(DomainError):
        error_curves({"no metric": trace([None, None], [0, 1])})


def test_error_curve_without_progress():
    curves = error_curves({"flat": trace([1, 1], [0, 1])})
    np.testing.assert_array_equal(curves["flat"].values, [0, 0])


def test_average_error_curves():
    first = error_curves({"a": trace([3, 1], [0, 1])})
    second = error_curves({"a": trace([3, 2, 1], [0, 0.5, 2])})

    frame = average_error_curves([first, second], maxtime=2, samples=5)

    assert list(frame.columns) == ["t", "a"]
    np.testing.assert_allclose(frame["t"], [0, 0.5, 1, 1.5, 2])
    np.testing.assert_allclose(frame["a"], [1, 0.75, 0.25, 0.25, 0])

    with pytest.raises(DomainError):
        average_error_curves([], maxtime=1)


def test_run_cs_instance():
    instance, results, lambdas = run_cs_instance(OrdSparse(), 32, 16, 4, seed=1, lam_lp=5e-2, lam_log=8e-2,
                                                 maxtime=0.2)

    assert set(results) == set(ALGORITHMS)
    assert lambdas["DMA_log"] == 8e-2
    assert lambdas["NPG_L1"] == 5e-2

    x0 = sorted_initial_point(32, 1)
    for name, result in results.items():
        assert result.records[0].metric == pytest.approx(instance.recovery_error(x0))
        assert result.records[-1].metric == pytest.approx(instance.recovery_error(result.x))
        assert cs_problem(instance, ALGORITHMS[name], lambdas[name]).is_feasible(result.x)

    with pytest.raises(OrdSparseMisconfigured):
        run_cs_instance(OrdSparse(), 32, 16, 4, seed=1, lam_lp=5e-2, lam_log=8e-2, maxtime=2,
                        algorithms=["DMA_lp", "ISTA"])


def test_run_cs_instance_stops_at_maxtime():
    _, results, _ = run_cs_instance(OrdSparse(), 16, 8, 2, seed=0, lam_lp=5e-2, lam_log=8e-2, maxtime=0.2,
                                    algorithms=["NPG_L1", "DMA_lp"])

    for result in results.values():
        assert result.reason == TerminationReason.max_time
        assert result.config["tol_step"] == 0
        assert result.config["max_iters"] == sys.maxsize


def test_run_cs_instance_tuning_solver(mocker):
    tune = mocker.patch("ordsparse.experiments.synthetic.tune_lambda", return_value=0.07)

    _, results, lambdas = run_cs_instance(OrdSparse(), 16, 8, 2, seed=0, lam_lp=5e-2, lam_log=8e-2, maxtime=0.1,
                                          tune=True, algorithms=["NPG_L1"])

    tuning_solver = tune.call_args[0][5]
    assert tuning_solver.tol_step == TUNING_TOL_STEP
    assert tuning_solver.max_time_s == 0.1
    assert lambdas["NPG_L1"] == 0.07
    assert results["NPG_L1"].config["tol_step"] == 0


def test_tune_lambda():
    instance = gen_cs_instance(32, 16, 4, 0.05, seed=2)
    algorithm = ALGORITHMS["NPG_L1"]
    x0 = sorted_initial_point(32, 2)

    lam = tune_lambda(OrdSparse(), instance, algorithm, 0.05, x0, NPGSolver(max_iters=200), factors=[0.5, 1, 2])

    assert lam in {0.025, 0.05, 0.1}


def test_run_cs_benchmark():
    result = run_cs_benchmark(OrdSparse(threads=2), 32, 16, 4, seeds=[0, 1], maxtime=1,
                              algorithms=["DMA_lp", "NPG_L1c"], signal_entries=10)

    assert list(result.curves.columns) == ["t", "DMA_lp", "NPG_L1c"]
    assert len(result.curves) == TIME_GRID_SAMPLES
    assert result.curves["DMA_lp"].iloc[0] == 1
    assert np.all(np.diff(result.curves["NPG_L1c"]) <= 1e-15)

    assert len(result.errors) == 4
    assert set(result.errors.columns) >= {"seed", "algorithm", "lambda", "recovery_error", "iterations", "time_s"}
    assert list(result.signals.columns) == ["x_true", "DMA_lp", "NPG_L1c"]
    assert len(result.signals) == 10
    assert result.seeds == [0, 1]

    with pytest.raises(DomainError):
        run_cs_benchmark(OrdSparse(), 32, 16, 4, seeds=[])


@SLOW
def test_desk_benchmark():
    n, m, s = DESK
    result = run_cs_benchmark(OrdSparse(threads=2), n, m, s, seeds=[0, 1], maxtime=CS_TRIPLES["desk"].maxtime)

    assert len(result.errors) == 2 * len(ALGORITHMS)
    for name in ALGORITHMS:
        values = result.curves[name].to_numpy()
        assert values[0] == 1
        assert np.all(np.diff(values) <= 1e-15)


@SLOW
def test_desk_recovery_ordering():
    """ With tuned lambdas the lp model with order constraints recovers the signal better than the l1 models
    on most instances.
    """
    n, m, s = DESK
    triple = CS_TRIPLES["desk"]

    result = run_cs_benchmark(OrdSparse(), n, m, s, seeds=range(10), sigma=0.1, lam_lp=triple.lam_lp,
                              lam_log=triple.lam_log, maxtime=triple.maxtime, tune=True,
                              algorithms=["DMA_lp", "NPG_L1", "NPG_L1c"])

    errors = result.errors.pivot(index="seed", columns="algorithm", values="recovery_error")

    assert len(errors) == 10
    assert (errors["DMA_lp"] < errors["NPG_L1"]).sum() >= 7
    assert (errors["DMA_lp"] < errors["NPG_L1c"]).sum() >= 6
