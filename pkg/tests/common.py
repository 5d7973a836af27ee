import os

import numpy as np
import pytest

SLOW = pytest.mark.skipif(not os.environ.get("ORDSPARSE_SLOW_TESTS", False),
                          reason="Set ORDSPARSE_SLOW_TESTS to run the desk-scale benchmarks.")

#: (n, m, s) of the smallest benchmark instance
DESK = (256, 54, 18)


def random_least_squares(m, n, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=0)
    return A, rng.standard_normal(m)


def brute_force_isotone_projection(y, iterations=20000):
    """ Projected gradient on the cone ``w_1 >= ... >= w_n >= 0`` written as ``w = L u`` with ``u >= 0``,
    ``L`` upper triangular ones. Slow but independent of the pooling algorithm.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    L = np.triu(np.ones((n, n)))
    step = 1 / np.linalg.norm(L, 2) ** 2
    u = np.zeros(n)
    for _ in range(iterations):
        u = np.maximum(u - step * (L.T @ (L @ u - y)), 0)
    return L @ u


def grid_minimizer(objective, upper, resolution=1e-6):
    """ Minimizes a scalar function on ``[0, upper]`` by a grid search refined around the best grid point.
    """
    grid = np.linspace(0, upper, int(upper / 1e-3) + 1)
    best = grid[np.argmin(objective(grid))]
    fine = np.linspace(max(best - 2e-3, 0), min(best + 2e-3, upper), int(4e-3 / resolution) + 1)
    return fine[np.argmin(objective(fine))]

#: Path to the real ozone data, the checks against the published results run only with it
LAOZONE_DATA = os.environ.get("ORDSPARSE_LAOZONE_DATA")

WITH_LAOZONE = pytest.mark.skipif(not LAOZONE_DATA, reason="Set ORDSPARSE_LAOZONE_DATA to the path of LAozone.data.")
