""" Proximal maps of the penalties used by the nonmonotone proximal gradient baselines.

The scalar maps are vectorized, ``y`` may be a float or an array. They are all odd in ``y``.
"""
from typing import Union

import numpy as np
from scipy.optimize import brentq

from .constraints import ConstraintSet
from .exceptions import DomainError
from .utils import logger

ArrayLike = Union[float, np.ndarray]

#: Tolerance of the root finder in :func:`prox_lp`
ROOT_TOL = 1e-12

NEWTON_MAX_ITER = 100


def _positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise DomainError(f"{name}={value} must be positive.")
    return value


def _output(array: np.ndarray) -> ArrayLike:
    if array.ndim == 0:
        return float(array)
    return array


def sign(y: ArrayLike) -> np.ndarray:
    """ Sign with the convention ``sign(0) = 1``.
    """
    return np.where(np.asarray(y, dtype=float) >= 0, 1.0, -1.0)


def prox_l1(y: ArrayLike, t: float) -> ArrayLike:
    """ Soft thresholding, the proximal map of ``t * |.|``. ``t = 0`` is the identity.
    """
    t = float(t)
    if not t >= 0:
        raise DomainError(f"t={t} must be nonnegative.")
    y = np.asarray(y, dtype=float)
    return _output(np.sign(y) * np.maximum(np.abs(y) - t, 0.0))


def _lp_stationary_root(a: np.ndarray, k: float, p: float, lower: np.ndarray) -> np.ndarray:
    """ Largest root of ``t + k * t**(p - 1) = a`` on ``[lower, a]``, where ``lower`` is the minimizer of the
    left hand side. The left hand side is convex and increasing there, Newton from ``a`` decreases monotonically.
    """
    t = a.copy()
    converged = np.zeros(a.shape, dtype=bool)

    for _ in range(NEWTON_MAX_ITER):
        value = t + k * t ** (p - 1) - a
        slope = 1 - k * (1 - p) * t ** (p - 2)

        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(slope > 0, value / slope, 0.0)

        new_t = np.maximum(t - step, lower)
        converged = np.abs(new_t - t) <= ROOT_TOL * np.maximum(1.0, a)
        t = new_t
        if converged.all():
            return t

    # bisection for whatever Newton left behind, only near the flat point of the left hand side
    for index in np.flatnonzero(~converged):
        a_i, lower_i = float(a[index]), float(lower[index])
        equation = lambda s: s + k * s ** (p - 1) - a_i  # noqa: E731
        if equation(lower_i) >= 0:
            t[index] = lower_i
        else:
            t[index] = brentq(equation, lower_i, a_i, xtol=ROOT_TOL)

    logger.debug("prox_lp fell back to bisection for %s entries", np.count_nonzero(~converged))

    return t


def prox_lp(y: ArrayLike, gamma: float, lam: float, p: float) -> ArrayLike:
    """ The proximal map of ``lam * |.|**p``, i.e. the global minimizer of ``(t - y)**2 / (2 gamma) + lam |t|**p``.

    The candidate ``0`` is compared against the largest stationary point in ``(0, |y|)``. When both have the same
    objective value, ``0`` is returned.

    :raise DomainError: If ``gamma`` or ``lam`` isn't positive or ``p`` is outside of ``(0, 1)``.
    """
    gamma = _positive(gamma, "gamma")
    lam = _positive(lam, "lambda")
    p = float(p)
    if not 0 < p < 1:
        raise DomainError(f"p={p} must lie in (0, 1).")

    y = np.asarray(y, dtype=float)
    a = np.abs(np.atleast_1d(y)).astype(float)
    k = gamma * lam * p

    # minimizer of t + k t**(p-1) on t > 0
    flat_point = (k * (1 - p)) ** (1 / (2 - p))
    flat_value = flat_point + k * flat_point ** (p - 1)

    result = np.zeros_like(a)
    candidates = a >= flat_value
    if candidates.any():
        a_c = a[candidates]
        roots = _lp_stationary_root(a_c, k, p, np.full(a_c.shape, flat_point))

        root_objective = (roots - a_c) ** 2 / (2 * gamma) + lam * roots ** p
        zero_objective = a_c ** 2 / (2 * gamma)
        result[candidates] = np.where(root_objective < zero_objective, roots, 0.0)

    result = np.sign(np.atleast_1d(y)) * result
    return _output(result.reshape(y.shape))


def prox_log(y: ArrayLike, gamma: float, lam: float, eps: float) -> ArrayLike:
    """ The proximal map of ``lam * log(1 + |.| / eps)``.

    For ``a = |y|`` the candidates are ``0`` and the real roots of ``t**2 + (eps - a) t + gamma lam - eps a = 0``
    lying in ``[0, a]``. The candidate with the least objective wins, ``0`` on ties.

    :raise DomainError: If any of the parameters isn't positive.
    """
    gamma = _positive(gamma, "gamma")
    lam = _positive(lam, "lambda")
    eps = _positive(eps, "eps")

    y = np.asarray(y, dtype=float)
    a = np.abs(y)

    def objective(t):
        return (t - a) ** 2 / (2 * gamma) + lam * np.log1p(t / eps)

    discriminant = (a + eps) ** 2 - 4 * gamma * lam
    real = discriminant >= 0
    root_disc = np.sqrt(np.where(real, discriminant, 0.0))

    best = np.zeros_like(a)
    best_value = objective(best)

    for root in ((a - eps) + root_disc) / 2, ((a - eps) - root_disc) / 2:
        admissible = real & (root >= 0) & (root <= a)
        candidate = np.where(admissible, root, 0.0)
        value = objective(candidate)
        better = admissible & (value < best_value)
        best = np.where(better, candidate, best)
        best_value = np.where(better, value, best_value)

    return _output(np.sign(y) * best)


def prox_l1_isotone(y, t: float, cs: ConstraintSet) -> np.ndarray:
    """ The proximal map of ``t * ||.||_1`` restricted to ``{x: |x| in Omega}``: ``sign(y) * P_Omega(|y| - t)``.

    ``t = 0`` is allowed and gives the plain projection of the magnitudes.

    :raise DomainError: If ``t`` is negative or the dimension doesn't match ``cs``.
    """
    t = float(t)
    if not t >= 0:
        raise DomainError(f"t={t} must be nonnegative.")

    y = np.asarray(y, dtype=float)
    return sign(y) * cs.project(np.abs(y) - t)
