import numpy as np
import pytest
from hypothesis import given, strategies as st

from ordsparse import ConstraintSet
from ordsparse.exceptions import DomainError
from ordsparse.prox import prox_l1, prox_lp, prox_log, prox_l1_isotone, sign
from common import grid_minimizer


@pytest.mark.parametrize(["y", "t", "expected"], [
    (3, 1, 2),
    (0.5, 1, 0),
    (-3, 1, -2),
    (-3, 0, -3),
])
def test_prox_l1(y, t, expected):
    assert prox_l1(y, t) == expected


def test_prox_l1_negative_threshold():
    with pytest.raises(DomainError):
        prox_l1(1, -1)


def test_sign():
    np.testing.assert_array_equal(sign([-2, 0, 3]), [-1, 1, 1])


@pytest.mark.parametrize(["y", "gamma", "lam", "p", "expected"], [
    (0, 1, 0.1, 0.5, 0),
    (2, 1, 0.1, 0.5, 1.9643),
    (-2, 1, 0.1, 0.5, -1.9643),
    (0.1, 1, 10, 0.5, 0),
])
def test_prox_lp(y, gamma, lam, p, expected):
    assert prox_lp(y, gamma, lam, p) == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize(["y", "gamma", "lam", "eps", "expected"], [
    (0, 1, 0.1, 0.5, 0),
    (2, 1, 0.1, 0.5, 1.9593),
    (-2, 1, 0.1, 0.5, -1.9593),
])
def test_prox_log(y, gamma, lam, eps, expected):
    assert prox_log(y, gamma, lam, eps) == pytest.approx(expected, abs=1e-4)


@given(y=st.floats(min_value=0.01, max_value=5), gamma=st.floats(min_value=0.1, max_value=2),
       lam=st.floats(min_value=0.01, max_value=2), p=st.sampled_from([0.3, 0.5, 0.7]))
def test_prox_lp_grid_oracle(y, gamma, lam, p):
    def objective(t):
        return (t - y) ** 2 / (2 * gamma) + lam * t ** p

    value = prox_lp(y, gamma, lam, p)
    oracle = grid_minimizer(objective, y)

    # compare objective values, the minimizer can jump between 0 and the positive root
    assert objective(value) <= objective(oracle) + 1e-9
    assert 0 <= value <= y


@given(y=st.floats(min_value=0.01, max_value=5), gamma=st.floats(min_value=0.1, max_value=2),
       lam=st.floats(min_value=0.01, max_value=2), eps=st.floats(min_value=0.05, max_value=2))
def test_prox_log_grid_oracle(y, gamma, lam, eps):
    def objective(t):
        return (t - y) ** 2 / (2 * gamma) + lam * np.log1p(t / eps)

    value = prox_log(y, gamma, lam, eps)
    oracle = grid_minimizer(objective, y)

    assert objective(value) <= objective(oracle) + 1e-9
    assert 0 <= value <= y


@given(y=st.floats(min_value=-5, max_value=5))
def test_prox_odd(y):
    assert prox_lp(-y, 1, 0.2, 0.5) == -prox_lp(y, 1, 0.2, 0.5)
    assert prox_log(-y, 1, 0.2, 0.5) == -prox_log(y, 1, 0.2, 0.5)
    assert prox_l1(-y, 0.2) == -prox_l1(y, 0.2)


def test_prox_vectorized():
    y = np.array([[2, -2], [0.1, 0]])
    result = prox_lp(y, 1, 0.1, 0.5)

    assert result.shape == (2, 2)
    np.testing.assert_allclose(result, [[1.9643, -1.9643], [0, 0]], atol=1e-4)
    np.testing.assert_allclose(prox_log(y[0], 1, 0.1, 0.5), [1.9593, -1.9593], atol=1e-4)


@pytest.mark.parametrize("args", [(1, 0, 0.1, 0.5), (1, 1, 0, 0.5), (1, 1, 0.1, 1), (1, 1, 0.1, 0)])
def test_prox_lp_domain(args):
    with pytest.raises(DomainError):
        prox_lp(*args)


@pytest.mark.parametrize("args", [(1, 0, 0.1, 0.5), (1, 1, -1, 0.5), (1, 1, 0.1, 0)])
def test_prox_log_domain(args):
    with pytest.raises(DomainError):
        prox_log(*args)


@pytest.mark.parametrize(["y", "t", "expected"], [
    ([3, 1, 2], 0, [3, 1.5, 1.5]),
    ([5, 4, 3], 0, [5, 4, 3]),
    ([-3, -1, -2], 0, [-3, -1.5, -1.5]),
    ([3, -1, 2], 1, [2, -0.5, 0.5]),
    ([0.5, 0.2, 0], 1, [0, 0, 0]),
])
def test_prox_l1_isotone(y, t, expected):
    np.testing.assert_allclose(prox_l1_isotone(y, t, ConstraintSet.isotone(3)), expected)


def test_prox_l1_isotone_negative_threshold():
    with pytest.raises(DomainError):
        prox_l1_isotone([1, 2, 3], -1, ConstraintSet.isotone(3))
