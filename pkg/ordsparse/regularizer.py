""" Sparsity-inducing functions ``psi`` acting on magnitudes, their inverses ``phi`` and the constants
the doubly majorized algorithm and the diagnostics need.

All the evaluations are elementwise, scalars and numpy arrays are both accepted. A scalar input gives
a float back.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Union

import numpy as np

from .exceptions import DomainError, OrdSparseMisconfigured
from .utils import UNBOUNDED, Unbounded

ArrayLike = Union[float, np.ndarray]


class Family(Enum):
    linear = "l1"
    lp = "lp"
    log = "log"


#: The largest exponent for which the inverse of ``t**p`` has a locally Lipschitz right derivative
MAX_EXPONENT = 0.5


def _nonnegative(value: ArrayLike, name: str) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if np.any(array < 0) or np.any(np.isnan(array)):
        raise DomainError(f"{name} must be nonnegative.")
    return array


def _output(array: np.ndarray) -> ArrayLike:
    if array.ndim == 0:
        return float(array)
    return array


@dataclass(frozen=True)
class Regularizer:
    """ A sparsity-inducing function ``psi`` applied to magnitudes, with its inverse ``phi``.

    * ``Family.linear``: ``psi(t) = t``
    * ``Family.lp``: ``psi(t) = t ** p`` with ``0 < p <= 0.5``
    * ``Family.log``: ``psi(t) = log(1 + t / eps)`` with ``eps > 0``

    ``psi`` is continuous, concave, strictly increasing and ``psi(0) = 0``, so ``phi`` is convex.
    Instances are immutable.

    :raise OrdSparseMisconfigured: If the parameters don't match the family.
    """

    family: Family
    p: Optional[float] = None
    eps: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.family, Family):
            raise OrdSparseMisconfigured(f"{self.family!r} is not a regularizer family.")

        if self.family == Family.lp:
            if self.p is None or not 0 < float(self.p) <= MAX_EXPONENT:
                raise OrdSparseMisconfigured(
                    f"The exponent p={self.p} is not supported, it must lie in (0, {MAX_EXPONENT}]: above that "
                    f"the right derivative of the inverse of t**p is not locally Lipschitz at zero."
                )
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise OrdSparseMisconfigured("The exponent p only applies to the lp regularizer.")

        if self.family == Family.log:
            if self.eps is None or not float(self.eps) > 0:
                raise OrdSparseMisconfigured(f"The log regularizer requires eps > 0, got {self.eps}.")
            object.__setattr__(self, "eps", float(self.eps))
        elif self.eps is not None:
            raise OrdSparseMisconfigured("The parameter eps only applies to the log regularizer.")

    @classmethod
    def linear(cls) -> "Regularizer":
        return cls(Family.linear)

    @classmethod
    def lp(cls, p: float) -> "Regularizer":
        return cls(Family.lp, p=p)

    @classmethod
    def log(cls, eps: float) -> "Regularizer":
        return cls(Family.log, eps=eps)

    @classmethod
    def from_name(cls, name: str, *, p: Optional[float] = None, eps: Optional[float] = None) -> "Regularizer":
        """ Builds the regularizer from its command line name, ``l1``, ``lp`` or ``log``.
        Parameters which don't apply to the family are ignored.
        """
        try:
            family = Family(name)
        except ValueError:
            raise OrdSparseMisconfigured(f"Unknown regularizer '{name}', use one of l1, lp or log.")

        return cls(family,
                   p=p if family == Family.lp else None,
                   eps=eps if family == Family.log else None)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Regularizer":
        return cls.from_name(data["family"], p=data.get("p"), eps=data.get("eps"))

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family.value, "p": self.p, "eps": self.eps}

    @property
    def name(self) -> str:
        return self.family.value

    def psi(self, t: ArrayLike) -> ArrayLike:
        """ Evaluates ``psi(t)``.

        :raise DomainError: If ``t`` is negative.
        """
        t = _nonnegative(t, "t")
        if self.family == Family.linear:
            result = t.copy()
        elif self.family == Family.lp:
            result = np.power(t, self.p)
        else:
            result = np.log1p(t / self.eps)
        return _output(result)

    def phi(self, v: ArrayLike) -> ArrayLike:
        """ Evaluates the inverse ``phi(v)``, ``phi(psi(t)) == t``.

        :raise DomainError: If ``v`` is negative.
        """
        v = _nonnegative(v, "v")
        if self.family == Family.linear:
            result = v.copy()
        elif self.family == Family.lp:
            result = np.power(v, 1 / self.p)
        else:
            result = self.eps * np.expm1(v)
        return _output(result)

    def phi_right_deriv(self, v: ArrayLike) -> ArrayLike:
        """ Evaluates the right derivative of ``phi``. For lp it's zero at zero, since ``1/p > 1``.

        :raise DomainError: If ``v`` is negative.
        """
        v = _nonnegative(v, "v")
        if self.family == Family.linear:
            result = np.ones_like(v)
        elif self.family == Family.lp:
            result = np.power(v, 1 / self.p - 1) / self.p
        else:
            result = self.eps * np.exp(v)
        return _output(result)

    def psi_deriv(self, t: ArrayLike) -> ArrayLike:
        """ Evaluates ``psi'(t)`` for positive ``t``.

        :raise DomainError: If ``t`` is not positive.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0) or np.any(np.isnan(t)):
            raise DomainError("psi'(t) is only evaluated for t > 0.")
        if self.family == Family.linear:
            result = np.ones_like(t)
        elif self.family == Family.lp:
            result = self.p * np.power(t, self.p - 1)
        else:
            result = 1 / (self.eps + t)
        return _output(result)

    def psi_right_deriv_at_zero(self) -> Union[float, Unbounded]:
        """ Returns ``psi'_+(0)``, :data:`UNBOUNDED <ordsparse.utils.UNBOUNDED>` for lp.
        """
        if self.family == Family.linear:
            return 1.0
        if self.family == Family.lp:
            return UNBOUNDED
        return 1 / self.eps

    def phi_curvature_bound(self, a: float) -> float:
        """ Returns the supremum of ``phi''`` on ``[0, a]``, a valid constant ``c`` for
        ``|phi(s) - phi(t) - phi'_+(t)(s - t)| <= c/2 (s - t)**2`` on that interval.
        ``phi''`` is nondecreasing for all families, so the supremum sits at ``a``.
        """
        if self.family == Family.linear:
            return 0.0
        if self.family == Family.lp:
            exponent = 1 / self.p
            return exponent * (exponent - 1) * a ** (exponent - 2)
        return self.eps * np.exp(a)

    def majorization_constant(self, a: float, b_abs: float, gamma: float) -> float:
        """
        Returns ``L`` such that ``g(s) <= g(t) + g'_+(t)(s - t) + L/2 (s - t)**2`` for all ``s, t`` in ``[0, a]``,
        where ``g(t) = (phi(t) - b)**2 / (2 gamma)`` and ``|b| <= b_abs``.

        Only used by the diagnostics, never inside the solvers.

        :raise DomainError: If ``a`` or ``gamma`` isn't positive or ``b_abs`` is negative.
        """
        if not a > 0:
            raise DomainError(f"The interval end a={a} must be positive.")
        if not gamma > 0:
            raise DomainError(f"gamma={gamma} must be positive.")
        if not b_abs >= 0:
            raise DomainError(f"b_abs={b_abs} must be nonnegative.")

        c = self.phi_curvature_bound(a)
        # phi is nonnegative, increasing and convex, the suprema are attained at a
        sup_phi = self.phi(a)
        sup_phi_deriv = self.phi_right_deriv(a)

        return c / gamma * (sup_phi + b_abs) + (sup_phi_deriv + a * c / 2) ** 2 / gamma
