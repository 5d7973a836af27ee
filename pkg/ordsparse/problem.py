import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from cached_property import cached_property

from .constraints import ConstraintSet
from .exceptions import DomainError, OrdSparseMisconfigured, DataError
from .regularizer import Regularizer
from .utils import UNBOUNDED, Unbounded, hash_array, hash_json, logger


def _frozen(array) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


class LeastSquares:
    """ The smooth term ``f(x) = scale / 2 * ||Ax - b||**2``.

    ``scale`` is 1 for compressed sensing models and ``1/N`` for the time-lagged regression with ``N`` observations.
    The matrix and the vector are copied and frozen, instances are immutable.
    """

    def __init__(self, A, b, scale: float = 1.0) -> None:
        A = _frozen(A)
        b = _frozen(b)

        if A.ndim != 2:
            raise DomainError("A must be a matrix.")
        if b.shape != (A.shape[0], ):
            raise DomainError(f"b must be a vector of length {A.shape[0]}, got shape {b.shape}.")
        if not float(scale) > 0:
            raise DomainError(f"The scale {scale} must be positive.")

        self._A = A
        self._b = b
        self._scale = float(scale)

    @property
    def A(self) -> np.ndarray:
        return self._A

    @property
    def b(self) -> np.ndarray:
        return self._b

    @property
    def scale(self) -> float:
        return self._scale

    @property
    def shape(self) -> Tuple[int, int]:
        return self._A.shape

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self._A.shape[1], ):
            raise DomainError(f"Expected a vector of dimension {self._A.shape[1]}, got shape {x.shape}.")
        return x

    def residual(self, x) -> np.ndarray:
        return self._A @ self._check(x) - self._b

    def value_from_residual(self, residual: np.ndarray) -> float:
        return 0.5 * self._scale * float(residual @ residual)

    def gradient_from_residual(self, residual: np.ndarray) -> np.ndarray:
        return self._scale * (self._A.T @ residual)

    def value(self, x) -> float:
        return self.value_from_residual(self.residual(x))

    def gradient(self, x) -> np.ndarray:
        return self.gradient_from_residual(self.residual(x))

    def lipschitz_estimate(self, max_iter: int = 50, tol: float = 1e-10) -> float:
        """ Estimates ``scale * sigma_max(A)**2`` by power iteration on ``A^T A``, stopping after ``max_iter``
        iterations or once the relative change of the estimate drops below ``tol``.
        """
        n = self._A.shape[1]
        vector = np.random.default_rng(0).standard_normal(n)
        vector /= np.linalg.norm(vector)

        estimate = 0.0
        for _ in range(max_iter):
            image = self._A.T @ (self._A @ vector)
            value = float(np.linalg.norm(image))
            if value == 0:
                return 0.0

            converged = estimate > 0 and abs(value - estimate) < tol * estimate
            estimate = value
            vector = image / value
            if converged:
                break

        return self._scale * estimate

    @cached_property
    def hash(self) -> str:
        return hash_json([hash_array(self._A), hash_array(self._b), self._scale])


class Problem:
    """ The composite problem ``F(x) = f(x) + lambda * sum(psi(|x_i|)) + indicator(|x| in Omega)``.

    ``lambda`` must be nonnegative, zero is accepted for plain least squares baselines.
    """

    def __init__(self, smooth: LeastSquares, reg: Regularizer, lam: float, constraint: ConstraintSet) -> None:
        if not isinstance(smooth, LeastSquares):
            raise OrdSparseMisconfigured(f"{smooth!r} is not a LeastSquares instance.")
        if not isinstance(reg, Regularizer):
            raise OrdSparseMisconfigured(f"{reg!r} is not a Regularizer instance.")
        if not isinstance(constraint, ConstraintSet):
            raise OrdSparseMisconfigured(f"{constraint!r} is not a ConstraintSet instance.")

        try:
            lam = float(lam)
            if not lam >= 0:
                raise ValueError
        except (TypeError, ValueError):
            raise OrdSparseMisconfigured(f"lambda={lam!r} must be a nonnegative number.")

        if constraint.dim != smooth.shape[1]:
            raise DomainError(f"The constraint set has dimension {constraint.dim}, "
                              f"but A has {smooth.shape[1]} columns.")

        self._smooth = smooth
        self._reg = reg
        self._lam = lam
        self._constraint = constraint

    @classmethod
    def least_squares(cls, A, b, reg: Regularizer, lam: float, constraint: Union[ConstraintSet, str] = "nonneg", *,
                      scale: float = 1.0, block_len: Optional[int] = None) -> "Problem":
        """ Shortcut building the least squares term and, if ``constraint`` is a name, the constraint set.
        """
        smooth = LeastSquares(A, b, scale=scale)
        if isinstance(constraint, str):
            constraint = ConstraintSet.from_name(constraint, smooth.shape[1], block_len)
        return cls(smooth, reg, lam, constraint)

    @property
    def smooth(self) -> LeastSquares:
        return self._smooth

    @property
    def reg(self) -> Regularizer:
        return self._reg

    @property
    def lam(self) -> float:
        return self._lam

    @property
    def constraint(self) -> ConstraintSet:
        return self._constraint

    @property
    def dim(self) -> int:
        return self._smooth.shape[1]

    def __repr__(self):
        m, n = self._smooth.shape
        return f"Problem({m}x{n}, reg={self._reg.name}, lambda={self._lam:g}, {self._constraint!r})"

    def with_lambda(self, lam: float) -> "Problem":
        """ Returns the same problem with a different ``lambda``, the data is shared.
        """
        return Problem(self._smooth, self._reg, lam, self._constraint)

    def is_feasible(self, x) -> bool:
        return self._constraint.contains(np.abs(np.asarray(x, dtype=float)))

    def grad_smooth(self, x) -> np.ndarray:
        """ Returns ``scale * A^T (Ax - b)``.

        :raise DomainError: On dimension mismatch.
        """
        return self._smooth.gradient(x)

    def penalty(self, x) -> float:
        return self._lam * float(np.sum(self._reg.psi(np.abs(np.asarray(x, dtype=float)))))

    def objective_from_residual(self, x: np.ndarray, residual: np.ndarray) -> float:
        """ ``F(x)`` for an ``x`` known to be feasible, reusing ``Ax - b``. Used on solver iterates.
        """
        return self._smooth.value_from_residual(residual) + self.penalty(x)

    def full_objective(self, x) -> Union[float, Unbounded]:
        """ Returns ``F(x)``, or :data:`UNBOUNDED <ordsparse.utils.UNBOUNDED>` if ``|x|`` is not in the
        constraint set. Membership is tested exactly.
        """
        x = np.asarray(x, dtype=float)
        if not self.is_feasible(x):
            return UNBOUNDED
        return self._smooth.value(x) + self.penalty(x)

    def identification_error(self, x) -> float:
        """ Returns ``||Ax - b||``.
        """
        return float(np.linalg.norm(self._smooth.residual(x)))

    def lipschitz_estimate(self) -> float:
        return self._smooth.lipschitz_estimate()

    @cached_property
    def lipschitz(self) -> float:
        """ Cached power iteration estimate of the Lipschitz modulus ``L_f`` of the gradient.
        """
        return self.lipschitz_estimate()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale": self._smooth.scale,
            "lambda": self._lam,
            "regularizer": self._reg.to_dict(),
            "constraint": self._constraint.to_dict(),
        }

    @cached_property
    def hash(self) -> str:
        """ Returns a SHA256 hash of the problem for usage in cache keys.
        """
        return hash_json([self._smooth.hash, self.to_dict()])

    def save(self, directory: Union[str, Path]) -> Path:
        """ Stores the problem in ``directory``: ``A.npy`` (row-major binary), ``b.npy`` and ``problem.json``.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)

        np.save(directory / "A.npy", np.ascontiguousarray(self._smooth.A))
        np.save(directory / "b.npy", self._smooth.b)
        (directory / "problem.json").write_text(json.dumps(self.to_dict(), indent=2))

        logger.info("Stored problem at %s", directory)

        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "Problem":
        """ Loads a problem stored by :meth:`save`.

        :raise DataError: If the files are missing or corrupted.
        """
        directory = Path(directory)
        try:
            A = np.load(directory / "A.npy", allow_pickle=False)
            b = np.load(directory / "b.npy", allow_pickle=False)
            meta = json.loads((directory / "problem.json").read_text())

            return cls.least_squares(
                A, b,
                Regularizer.from_dict(meta["regularizer"]),
                meta["lambda"],
                ConstraintSet.from_dict(meta["constraint"]),
                scale=meta.get("scale", 1.0),
            )
        except (OSError, ValueError, KeyError, TypeError) as e:
            if isinstance(e, OrdSparseMisconfigured):
                raise
            raise DataError(f"Can't load a problem from {directory}: {e}")


def _load_csv(path: Path, ndmin: int) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=ndmin)
    except ValueError:
        # header row
        return np.loadtxt(path, delimiter=",", ndmin=ndmin, skiprows=1)


def load_vector(path: Union[str, Path]) -> np.ndarray:
    """ Loads a vector from a CSV (one value per line or a single row, an optional header row) or a ``.npy`` file.

    :raise DataError: If the file can't be read or doesn't hold a vector.
    """
    path = Path(path)
    try:
        if path.suffix == ".npy":
            vector = np.load(path, allow_pickle=False)
        else:
            vector = _load_csv(path, ndmin=1)
    except (OSError, ValueError) as e:
        raise DataError(f"Can't read a vector from {path}: {e}")

    vector = np.asarray(vector, dtype=float)
    if vector.ndim == 2 and 1 in vector.shape:
        vector = vector.ravel()
    if vector.ndim != 1:
        raise DataError(f"{path} doesn't contain a vector.")
    return vector


def load_matrix(path: Union[str, Path]) -> np.ndarray:
    """ Loads a matrix from a CSV file (one row per line) or a ``.npy`` file.

    :raise DataError: If the file can't be read.
    """
    path = Path(path)
    try:
        if path.suffix == ".npy":
            matrix = np.load(path, allow_pickle=False)
        else:
            matrix = _load_csv(path, ndmin=2)
    except (OSError, ValueError) as e:
        raise DataError(f"Can't read a matrix from {path}: {e}")
    return np.asarray(matrix, dtype=float)
