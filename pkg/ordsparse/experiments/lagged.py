""" Sparse time-lagged regression with block order constraints on the LA ozone data.

Every predictor gets a block of ``K`` coefficients, one per time lag, whose magnitudes are required to be
nonincreasing: older measurements can't matter more than recent ones.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, NamedTuple, Optional, Sequence, Tuple, Type, Union

import numpy as np
import pandas as pd
import requests

from .._ordsparse import OrdSparse
from ..constraints import ConstraintSet
from ..exceptions import DataError, DomainError, OrdSparseMisconfigured
from ..problem import Problem
from ..regularizer import Regularizer
from ..result import RunResult
from ..solver import BaseSolver, DMASolver, NPGSolver
from ..utils import logger
from .synthetic import sorted_initial_point

LAOZONE_URL = "https://hastie.su.domains/ElemStatLearn/datasets/LAozone.data"
LAOZONE_FILENAME = "LAozone.data"

RESPONSE = "ozone"
PREDICTORS = ["vh", "wind", "humidity", "temp", "ibh", "dpg", "ibt", "vis"]
LAOZONE_COLUMNS = [RESPONSE] + PREDICTORS + ["doy"]

#: Maximum time lag and number of observations of the full data set
DEFAULT_K = 20
DEFAULT_N = 155

#: Lag and number of observations fitting the synthetic stand-in
SYNTHETIC_K = 3
SYNTHETIC_N = 13


def load_laozone(path: Union[str, Path]) -> pd.DataFrame:
    """ Reads the comma separated LA ozone table with a header row.

    :raise DataError: If the file is missing or doesn't have the expected columns.
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as e:
        raise DataError(f"Can't read the ozone data from {path}: {e}")

    missing = [column for column in [RESPONSE] + PREDICTORS if column not in frame.columns]
    if missing:
        raise DataError(f"The ozone data in {path} is missing the columns {', '.join(missing)}.")

    return frame


def fetch_laozone(data_dir: Union[str, Path], url: str = LAOZONE_URL, timeout: float = 30) -> Path:
    """ Downloads the data into ``data_dir`` unless it's already there and returns the path to the file.

    :raise DataError: If the download fails.
    """
    path = Path(data_dir) / LAOZONE_FILENAME
    if path.exists():
        logger.debug("Using the already downloaded %s", path)
        return path

    logger.info("Downloading %s", url)

    try:
        response = requests.get(url, timeout=timeout)
        response.raise_for_status()
    except requests.RequestException as e:
        raise DataError(f"Can't download the ozone data from {url}: {e}")

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(response.content)

    return path


def synthetic_laozone(rows: int = 30, seed: int = 0) -> pd.DataFrame:
    """ A deterministic stand-in with the schema of the LA ozone table, the response depends on the current
    and the previous day of the predictors.
    """
    rng = np.random.default_rng(seed)
    predictors = rng.normal(size=(rows, len(PREDICTORS))) * np.arange(1, len(PREDICTORS) + 1)

    lagged = np.vstack([predictors[:1], predictors[:-1]])
    weights = np.linspace(1.0, 0.2, len(PREDICTORS))
    ozone = 10 + predictors @ weights + 0.5 * lagged @ weights + rng.normal(scale=0.5, size=rows)

    frame = pd.DataFrame(predictors, columns=PREDICTORS)
    frame.insert(0, RESPONSE, np.round(ozone, 3))
    frame["doy"] = np.arange(1, rows + 1)
    return frame


def laozone_matrix(frame: pd.DataFrame) -> np.ndarray:
    """ The response followed by the eight predictors, the day column is dropped.
    """
    return frame[[RESPONSE] + PREDICTORS].to_numpy(dtype=float)


def build_lagged_dataset(Z: np.ndarray, K: int, N: int, offset: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """ Builds the lagged design from ``Z``, response in the first column and predictors in the others.

    With zero based indices ``b[i] = Z[offset + i + K - 1, 0]`` and
    ``A[i, j K + k] = Z[offset + i + K - 1 - k, 1 + j]``,
    i.e. block ``j`` holds predictor ``j`` on the current day and the ``K - 1`` previous days.
    The training set uses ``offset = 0`` and the validation set ``offset = N``.

    :raise DomainError: If ``K`` or ``N`` isn't positive.
    :raise DataError: If ``Z`` has fewer than ``offset + N + K - 1`` rows.
    """
    Z = np.asarray(Z, dtype=float)
    if K < 1 or N < 1 or offset < 0:
        raise DomainError(f"K={K} and N={N} must be positive, offset={offset} nonnegative.")
    if Z.ndim != 2 or Z.shape[1] < 2:
        raise DataError("Z must be a table with the response and at least one predictor.")

    needed = offset + N + K - 1
    if Z.shape[0] < needed:
        raise DataError(f"The lagged design needs {needed} rows, the data has {Z.shape[0]}.")

    num_predictors = Z.shape[1] - 1
    last = offset + K - 1

    b = Z[last:last + N, 0].copy()
    A = np.empty((N, num_predictors * K))
    for j in range(num_predictors):
        for k in range(K):
            A[:, j * K + k] = Z[last - k:last - k + N, 1 + j]

    return A, b


@dataclass(frozen=True)
class Standardization:
    """ Sample means and standard deviations (``n - 1`` denominator) of the columns of ``A`` and of ``b``.
    """

    column_means: np.ndarray
    column_stds: np.ndarray
    b_mean: float
    b_std: float

    def unstandardize_b(self, b_std: np.ndarray) -> np.ndarray:
        return self.b_std * np.asarray(b_std) + self.b_mean


def _column_stats(matrix: np.ndarray, name: str) -> Tuple[np.ndarray, np.ndarray]:
    if matrix.shape[0] < 2:
        raise DataError(f"Standardizing {name} needs at least two rows.")

    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0, ddof=1)
    constant = np.flatnonzero(stds == 0)
    if constant.size:
        raise DataError(f"Can't standardize {name}, the columns {constant.tolist()} have zero variance.")
    return means, stds


def standardize_columns(A: np.ndarray) -> np.ndarray:
    """ Standardizes each column of ``A`` with its own mean and sample standard deviation.

    :raise DataError: If a column has zero variance.
    """
    A = np.asarray(A, dtype=float)
    means, stds = _column_stats(A, "the matrix")
    return (A - means) / stds


def standardize_fit(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Standardization]:
    """ Standardizes the columns of ``A`` and ``b``.

    :raise DataError: If a column or ``b`` has zero variance.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)

    means, stds = _column_stats(A, "the matrix")
    (b_mean, ), (b_std, ) = _column_stats(b.reshape(-1, 1), "the response")

    stats = Standardization(means, stds, float(b_mean), float(b_std))
    return (A - means) / stds, (b - b_mean) / b_std, stats


def predict_validation(x_star: np.ndarray, A_val: np.ndarray, stats: Standardization) -> np.ndarray:
    """ ``std(b) * (A_val' x_star) + mean(b)``, ``A_val'`` is ``A_val`` standardized with its own statistics.

    :raise DomainError: On dimension mismatch.
    """
    x_star = np.asarray(x_star, dtype=float)
    A_val = np.asarray(A_val, dtype=float)
    if x_star.shape != (A_val.shape[1], ):
        raise DomainError(f"x has shape {x_star.shape}, the validation matrix has {A_val.shape[1]} columns.")

    return stats.unstandardize_b(standardize_columns(A_val) @ x_star)


@dataclass(frozen=True)
class LaggedDataset:
    """ The training and validation sets of the lagged regression, the training set standardized.
    """

    #: Response followed by the predictors
    Z: np.ndarray
    K: int
    N: int

    #: Standardized training design and response
    A: np.ndarray
    b: np.ndarray

    #: Raw validation design and response
    A_val: np.ndarray
    b_val: np.ndarray

    #: Statistics of the raw training data
    stats: Standardization

    @classmethod
    def from_matrix(cls, Z: np.ndarray, K: int = DEFAULT_K, N: int = DEFAULT_N) -> "LaggedDataset":
        A, b = build_lagged_dataset(Z, K, N, offset=0)
        A_val, b_val = build_lagged_dataset(Z, K, N, offset=N)
        A_std, b_std, stats = standardize_fit(A, b)
        return cls(Z=np.asarray(Z, dtype=float), K=K, N=N, A=A_std, b=b_std, A_val=A_val, b_val=b_val,
                   stats=stats)

    @property
    def num_predictors(self) -> int:
        return self.Z.shape[1] - 1

    def validation_error(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(predict_validation(x, self.A_val, self.stats) - self.b_val))


class LaggedModel(NamedTuple):
    name: str
    solver: Type[BaseSolver]
    exponent_q: float


#: The compared models, the exponent 1 stands for the l1 norm
LAGGED_MODELS: Dict[str, LaggedModel] = {
    model.name: model for model in [
        LaggedModel("DMA_q0.3", DMASolver, 0.3),
        LaggedModel("DMA_q0.5", DMASolver, 0.5),
        LaggedModel("NPG_q1", NPGSolver, 1.0),
    ]
}

#: The ``lambda`` reported as best for the full data set with ``K = 20``, ``N = 155``
REFERENCE_LAMBDAS = {"DMA_q0.3": 3.68e-3, "DMA_q0.5": 4.13e-3, "NPG_q1": 1.67e-2}

#: The validation errors reported for :data:`REFERENCE_LAMBDAS`
REFERENCE_VALIDATION_ERRORS = {"DMA_q0.3": 55.55, "DMA_q0.5": 56.17, "NPG_q1": 56.98}


def reference_lambdas(models: Optional[Sequence[str]] = None) -> Dict[str, Sequence[float]]:
    """ One element grids with the reference ``lambda`` of each model, for :func:`run_lagged_benchmark`.
    """
    return {name: [REFERENCE_LAMBDAS[name]] for name in (models or REFERENCE_LAMBDAS)}


def compare_with_reference(best: pd.DataFrame) -> pd.DataFrame:
    """ Relative deviations of the validation errors in ``best`` from :data:`REFERENCE_VALIDATION_ERRORS`.
    Only meaningful on the full data set with the default ``K`` and ``N``.
    """
    rows = best[best["model"].isin(list(REFERENCE_VALIDATION_ERRORS))]
    reference = rows["model"].map(REFERENCE_VALIDATION_ERRORS)
    return pd.DataFrame({
        "model": rows["model"],
        "lambda": rows["lambda"],
        "validation_error": rows["validation_error"],
        "reference_error": reference,
        "relative_deviation": (rows["validation_error"] - reference) / reference,
    }).reset_index(drop=True)


def lagged_problem(dataset: LaggedDataset, exponent_q: float, lam: float) -> Problem:
    """ ``1/(2N) ||Ax - b||**2 + lam sum |x_j|**q`` with the block order constraints, ``q = 1`` is the l1 norm.
    """
    reg = Regularizer.linear() if exponent_q == 1 else Regularizer.lp(exponent_q)
    constraint = ConstraintSet.block_isotone(dataset.A.shape[1], dataset.K)
    return Problem.least_squares(dataset.A, dataset.b, reg, lam, constraint, scale=1 / dataset.N)


def lambda_grid(start: float = -4, stop: float = 1, num: int = 100) -> np.ndarray:
    """ ``num`` logarithmically spaced values from ``10**start`` to ``10**stop``.
    """
    return np.logspace(start, stop, num)


def evaluate(dataset: LaggedDataset, problem: Problem, result: RunResult) -> Dict[str, float]:
    """ Identification error on the standardized training set and validation error of the solution.
    """
    x = result.x
    prediction = predict_validation(x, dataset.A_val, dataset.stats)
    return {
        "lambda": problem.lam,
        "identification_error": problem.identification_error(x),
        "validation_error": float(np.linalg.norm(prediction - dataset.b_val)),
        "negative_predictions": int(np.count_nonzero(prediction < 0)),
        "nonzeros": int(np.count_nonzero(x)),
        "iterations": result.iterations,
    }


def lambda_sweep(ordsparse: OrdSparse, dataset: LaggedDataset, model: LaggedModel, lambdas: Sequence[float],
                 x0: np.ndarray, tol_step: float = 1e-6) -> pd.DataFrame:
    """ Solves the model for each ``lambda`` from the same ``x0`` and tabulates identification and validation
    errors. The solves run on ``ordsparse.threads`` threads.
    """
    solver = model.solver(tol_step=tol_step)
    lambdas = [float(lam) for lam in lambdas]
    problems = [lagged_problem(dataset, model.exponent_q, lam) for lam in lambdas]

    results = ordsparse.solve_many([(problem, x0) for problem in problems], solver=solver)

    frame = pd.DataFrame([evaluate(dataset, problem, result) for problem, result in zip(problems, results)])
    frame.insert(0, "model", model.name)
    return frame


def best_lambda(table: pd.DataFrame) -> pd.Series:
    """ The row with the smallest validation error, the smaller ``lambda`` on ties.
    """
    if table.empty:
        raise DataError("The table is empty.")
    ordered = table.sort_values(["validation_error", "lambda"], kind="mergesort")
    return ordered.iloc[0]


@dataclass
class LaggedBenchmarkResult:
    #: One row per model and ``lambda``
    sweeps: pd.DataFrame

    #: The row with the smallest validation error per model
    best: pd.DataFrame

    #: True validation response and the predictions of each model at its best ``lambda``
    predictions: pd.DataFrame

    x0_seed: int = 0


def run_lagged_benchmark(ordsparse: OrdSparse, dataset: LaggedDataset, *,
                         lambdas: Optional[Union[Sequence[float], Dict[str, Sequence[float]]]] = None,
                         models: Optional[Sequence[str]] = None,
                         seed: int = 0,
                         tol_step: float = 1e-6) -> LaggedBenchmarkResult:
    """ Runs the sweep for each model from one shared random initial point with nonincreasing blocks.

    ``lambdas`` is either one sequence for all the models or a sequence per model name, the default is
    :func:`lambda_grid`.
    """
    names = list(models or LAGGED_MODELS)
    unknown = set(names) - set(LAGGED_MODELS)
    if unknown:
        raise OrdSparseMisconfigured(f"Unknown models: {', '.join(sorted(unknown))}.")

    x0 = sorted_initial_point(dataset.A.shape[1], seed, block_len=dataset.K)

    sweeps, best_rows = [], []
    predictions = pd.DataFrame({"true": dataset.b_val})

    for name in names:
        model = LAGGED_MODELS[name]
        if lambdas is None:
            grid = lambda_grid()
        elif isinstance(lambdas, dict):
            grid = lambdas[name]
        else:
            grid = lambdas

        logger.info("Sweeping %s lambda values for %s", len(grid), name)
        table = lambda_sweep(ordsparse, dataset, model, grid, x0, tol_step=tol_step)
        sweeps.append(table)

        best = best_lambda(table)
        best_rows.append(best)

        result = ordsparse.solve(lagged_problem(dataset, model.exponent_q, best["lambda"]), x0,
                                 solver=model.solver(tol_step=tol_step))
        predictions[name] = predict_validation(result.x, dataset.A_val, dataset.stats)

    return LaggedBenchmarkResult(
        sweeps=pd.concat(sweeps, ignore_index=True),
        best=pd.DataFrame(best_rows).reset_index(drop=True),
        predictions=predictions,
        x0_seed=seed,
    )
