""" Order constrained compressed sensing: random instances, the six compared algorithms and normalized
recovery error curves.
"""
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Type

import numpy as np
import pandas as pd

from .._ordsparse import OrdSparse
from ..constraints import ConstraintSet
from ..exceptions import DomainError, OrdSparseMisconfigured
from ..problem import Problem
from ..regularizer import Regularizer
from ..result import RunResult
from ..solver import BaseSolver, DMASolver, NPGSolver
from ..utils import logger

#: Number of samples of the averaged error curves
TIME_GRID_SAMPLES = 200

#: Factors applied to the default ``lambda`` when tuning
TUNING_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)

#: Step tolerance of the tuning runs, the benchmark runs themselves stop only at the time limit
TUNING_TOL_STEP = 1e-6


@dataclass(frozen=True)
class CsInstance:
    """ ``b = A x_true + sigma * noise``, ``A`` has unit norm columns and ``x_true`` is ``s``-sparse with entries
    nonincreasing in magnitude.
    """

    A: np.ndarray
    b: np.ndarray
    x_true: np.ndarray
    sigma: float
    seed: int

    @property
    def shape(self) -> Tuple[int, int, int]:
        """ ``(n, m, s)``
        """
        return self.A.shape[1], self.A.shape[0], int(np.count_nonzero(self.x_true))

    def recovery_error(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x - self.x_true))


def sort_by_magnitude(vector: np.ndarray) -> np.ndarray:
    """ Reorders ``vector`` so that its entries are nonincreasing in magnitude, signs are kept.
    """
    vector = np.asarray(vector, dtype=float)
    return vector[np.argsort(-np.abs(vector), kind="stable")]


def gen_cs_instance(n: int, m: int, s: int, sigma: float, seed: int) -> CsInstance:
    """ Generates a random instance, deterministic for the ``seed``.

    :raise DomainError: If ``s > n``, ``m < 1`` or ``sigma < 0``.
    """
    if not 0 <= s <= n:
        raise DomainError(f"The sparsity s={s} must lie in [0, n={n}].")
    if m < 1:
        raise DomainError(f"The number of measurements m={m} must be positive.")
    if sigma < 0:
        raise DomainError(f"The noise level sigma={sigma} must be nonnegative.")

    rng = np.random.default_rng(seed)

    x_true = np.zeros(n)
    x_true[:s] = sort_by_magnitude(rng.standard_normal(s))

    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=0)

    b = A @ x_true + sigma * rng.standard_normal(m)

    return CsInstance(A=A, b=b, x_true=x_true, sigma=float(sigma), seed=seed)


def sorted_initial_point(n: int, seed: int, block_len: Optional[int] = None) -> np.ndarray:
    """ A Gaussian vector reordered to be nonincreasing in magnitude, within each block of ``block_len`` entries
    if given. Feasible for all the shipped constraint sets.

    :raise DomainError: If ``block_len`` doesn't divide ``n``.
    """
    vector = np.random.default_rng(seed).standard_normal(n)
    if block_len is None:
        return sort_by_magnitude(vector)

    if block_len < 1 or n % block_len:
        raise DomainError(f"The block length {block_len} doesn't divide the dimension {n}.")
    return np.concatenate([sort_by_magnitude(block) for block in vector.reshape(-1, block_len)])


class Algorithm(NamedTuple):
    name: str
    solver: Type[BaseSolver]
    regularizer: str
    constraint: str


#: The compared algorithms, the solver with the model it solves
ALGORITHMS: Dict[str, Algorithm] = {
    algorithm.name: algorithm for algorithm in [
        Algorithm("DMA_lp", DMASolver, "lp", "isotone"),
        Algorithm("DMA_log", DMASolver, "log", "isotone"),
        Algorithm("NPG_lp", NPGSolver, "lp", "nonneg"),
        Algorithm("NPG_L1c", NPGSolver, "l1", "isotone"),
        Algorithm("NPG_L1", NPGSolver, "l1", "nonneg"),
        Algorithm("NPG_log", NPGSolver, "log", "nonneg"),
    ]
}


class CsTriple(NamedTuple):
    n: int
    m: int
    s: int
    lam_lp: float
    lam_log: float
    maxtime: float


#: Problem sizes with the ``lambda`` of the lp and l1 models, of the log models and the time limit
CS_TRIPLES: Dict[str, CsTriple] = {
    "desk": CsTriple(256, 54, 18, 5e-2, 8e-2, 4.0),
    "small": CsTriple(2560, 540, 180, 5e-2, 8e-2, 4.0),
    "medium": CsTriple(10240, 2160, 720, 8e-2, 1e-1, 16.0),
    "large": CsTriple(25600, 5400, 1800, 1e-1, 2e-1, 40.0),
}


def default_lambda(algorithm: Algorithm, lam_lp: float, lam_log: float) -> float:
    return lam_log if algorithm.regularizer == "log" else lam_lp


def cs_problem(instance: CsInstance, algorithm: Algorithm, lam: float, p: float = 0.5, eps: float = 0.5) -> Problem:
    n = instance.A.shape[1]
    reg = Regularizer.from_name(algorithm.regularizer, p=p, eps=eps)
    return Problem.least_squares(instance.A, instance.b, reg, lam, ConstraintSet.from_name(algorithm.constraint, n))


@dataclass
class ErrorCurve:
    """ The normalized recovery error ``E(t) = min{e(k): T(k) <= t}`` with
    ``e(k) = (e_r(k) - e_r_min) / (e_r(0) - e_r_min)``, stored at the times ``T(k)`` of the iterates.
    """

    algorithm: str
    times: np.ndarray
    values: np.ndarray
    e_r_min: float

    def at(self, t) -> np.ndarray:
        """ Evaluates the step function at the times ``t``, ``nan`` before the first iterate.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        index = np.searchsorted(self.times, t, side="right") - 1
        return np.where(index >= 0, self.values[np.maximum(index, 0)], np.nan)


def error_curves(traces: Dict[str, RunResult]) -> Dict[str, ErrorCurve]:
    """ Builds the error curves of all the algorithms run on one instance. The traces must carry the recovery
    error ``||x^k - x_true||`` as the ``metric`` of the records.

    :raise DomainError: If there are no traces or a trace doesn't have the recovery errors.
    """
    if not traces:
        raise DomainError("Error curves need at least one trace.")

    for name, result in traces.items():
        if not result.records or any(record.metric is None for record in result.records):
            raise DomainError(f"The trace of {name} doesn't contain recovery errors.")

    e_r_min = min(result.records[-1].metric for result in traces.values())

    curves = {}
    for name, result in traces.items():
        errors = np.array([record.metric for record in result.records], dtype=float)
        times = np.array([record.time_s for record in result.records], dtype=float)

        denominator = errors[0] - e_r_min
        if denominator > 0:
            normalized = (errors - e_r_min) / denominator
        else:
            logger.warning("The initial recovery error of %s equals the minimum, its error curve is zero", name)
            normalized = np.zeros_like(errors)

        curves[name] = ErrorCurve(name, times, np.minimum.accumulate(normalized), float(e_r_min))

    return curves


def average_error_curves(curves: Sequence[Dict[str, ErrorCurve]], maxtime: float,
                         samples: int = TIME_GRID_SAMPLES) -> pd.DataFrame:
    """ Averages the curves of several instances pointwise on ``samples`` uniform times in ``[0, maxtime]``.
    Returns a frame with the column ``t`` and one column per algorithm.
    """
    if not curves:
        raise DomainError("There are no curves to average.")

    grid = np.linspace(0.0, maxtime, samples)
    frame = pd.DataFrame({"t": grid})

    for name in curves[0]:
        frame[name] = np.mean([instance_curves[name].at(grid) for instance_curves in curves], axis=0)

    return frame


@dataclass
class CsBenchmarkResult:
    #: The averaged error curves, column ``t`` and one column per algorithm
    curves: pd.DataFrame

    #: One row per seed and algorithm: the ``lambda`` used, final recovery error, iterations and running time
    errors: pd.DataFrame

    #: Recovered signals of the first instance, one column per algorithm and ``x_true``
    signals: pd.DataFrame

    seeds: List[int] = field(default_factory=list)


def tune_lambda(ordsparse: OrdSparse, instance: CsInstance, algorithm: Algorithm, lam: float, x0: np.ndarray,
                solver: BaseSolver, p: float = 0.5, eps: float = 0.5,
                factors: Iterable[float] = TUNING_FACTORS) -> float:
    """ Returns the ``lambda`` from ``lam * factors`` with the smallest final recovery error.
    """
    errors = {}
    for factor in factors:
        candidate = lam * factor
        result = ordsparse.solve(cs_problem(instance, algorithm, candidate, p, eps), x0, solver=solver)
        errors[candidate] = instance.recovery_error(result.x)

    best = min(errors, key=errors.get)
    logger.debug("Tuned lambda of %s for seed %s: %s", algorithm.name, instance.seed, best)
    return best


def run_cs_instance(ordsparse: OrdSparse, n: int, m: int, s: int, seed: int, *,
                    sigma: float = 0.1,
                    lam_lp: float,
                    lam_log: float,
                    maxtime: float,
                    p: float = 0.5,
                    eps: float = 0.5,
                    tol_step: float = 0.0,
                    tune: bool = False,
                    algorithms: Optional[Sequence[str]] = None) -> Tuple[CsInstance, Dict[str, RunResult],
                                                                         Dict[str, float]]:
    """ Runs the algorithms on the instance generated from ``seed``, all from the same initial point.
    The runs aren't limited in iterations, with the default ``tol_step = 0`` they stop at ``maxtime``.
    ``lambda`` is tuned with runs stopping at :data:`TUNING_TOL_STEP` or ``maxtime``.

    :return: The instance, the results with recovery errors and the ``lambda`` used per algorithm.
    """
    names = list(algorithms or ALGORITHMS)
    unknown = set(names) - set(ALGORITHMS)
    if unknown:
        raise OrdSparseMisconfigured(f"Unknown algorithms: {', '.join(sorted(unknown))}.")

    instance = gen_cs_instance(n, m, s, sigma, seed)
    x0 = sorted_initial_point(n, seed)

    results, lambdas = {}, {}
    for name in names:
        algorithm = ALGORITHMS[name]
        solver = algorithm.solver(max_time_s=maxtime, tol_step=tol_step, max_iters=sys.maxsize)
        lam = default_lambda(algorithm, lam_lp, lam_log)

        if tune:
            tuning_solver = algorithm.solver(max_time_s=maxtime, tol_step=TUNING_TOL_STEP, max_iters=sys.maxsize)
            lam = tune_lambda(ordsparse, instance, algorithm, lam, x0, tuning_solver, p, eps)

        problem = cs_problem(instance, algorithm, lam, p, eps)
        results[name] = ordsparse.solve(problem, x0, solver=solver, monitor=instance.recovery_error)
        lambdas[name] = lam

    return instance, results, lambdas


def run_cs_benchmark(ordsparse: OrdSparse, n: int, m: int, s: int, *,
                     seeds: Sequence[int] = tuple(range(10)),
                     sigma: float = 0.1,
                     lam_lp: float = 5e-2,
                     lam_log: float = 8e-2,
                     maxtime: float = 4.0,
                     p: float = 0.5,
                     eps: float = 0.5,
                     tol_step: float = 0.0,
                     tune: bool = False,
                     algorithms: Optional[Sequence[str]] = None,
                     samples: int = TIME_GRID_SAMPLES,
                     signal_entries: Optional[int] = None) -> CsBenchmarkResult:
    """ Runs the benchmark over the ``seeds``, with ``ordsparse.threads`` instances in parallel.
    """
    seeds = list(seeds)
    if not seeds:
        raise DomainError("At least one seed is needed.")

    def run(seed):
        return run_cs_instance(ordsparse, n, m, s, seed, sigma=sigma, lam_lp=lam_lp, lam_log=lam_log,
                               maxtime=maxtime, p=p, eps=eps, tol_step=tol_step, tune=tune, algorithms=algorithms)

    logger.info("Running the compressed sensing benchmark (n, m, s) = (%s, %s, %s) on %s seeds", n, m, s,
                len(seeds))

    if ordsparse.threads > 1:
        with ThreadPoolExecutor(max_workers=ordsparse.threads) as executor:
            runs = list(executor.map(run, seeds))
    else:
        runs = [run(seed) for seed in seeds]

    curves, rows = [], []
    for seed, (instance, results, lambdas) in zip(seeds, runs):
        curves.append(error_curves(results))
        for name, result in results.items():
            rows.append({
                "seed": seed,
                "algorithm": name,
                "lambda": lambdas[name],
                "recovery_error": instance.recovery_error(result.x),
                "iterations": result.iterations,
                "time_s": result.records[-1].time_s,
                "reason": result.reason.value,
            })

    first_instance, first_results, _ = runs[0]
    entries = n if signal_entries is None else min(signal_entries, n)
    signals = pd.DataFrame({"x_true": first_instance.x_true[:entries]})
    for name, result in first_results.items():
        signals[name] = result.x[:entries]

    return CsBenchmarkResult(
        curves=average_error_curves(curves, maxtime, samples),
        errors=pd.DataFrame(rows),
        signals=signals,
        seeds=seeds,
    )
