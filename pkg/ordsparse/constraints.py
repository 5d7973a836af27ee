""" Constraint sets ``Omega`` for the magnitudes ``|x|`` and exact Euclidean projections onto them.

Every increasing bijection of the nonnegative reals fixing zero preserves nonnegativity and order,
so ``psi(Omega) == Omega`` for all the shipped sets and all supported regularizers. The projection
onto ``psi(Omega)`` is therefore the projection onto ``Omega`` itself.
"""
from enum import Enum
from typing import Any, Callable, Dict, Optional, Union

import numpy as np
from entrypoints import EntryPoint, BadEntryPoint

from .exceptions import DomainError, OrdSparseMisconfigured
from .utils import logger

Projection = Callable[[np.ndarray], np.ndarray]


def _pava_nonincreasing(y: np.ndarray) -> np.ndarray:
    """ Isotonic regression for the nonincreasing order, single pass with a stack of pools.
    Equal neighbours are not pooled, ties don't change the result.
    """
    means = []
    counts = []

    for value in y.tolist():
        mean, count = value, 1
        # pool while the previous block is smaller, i.e. the order is violated
        while means and means[-1] < mean:
            previous_mean = means.pop()
            previous_count = counts.pop()
            total = previous_count + count
            mean = (previous_mean * previous_count + mean * count) / total
            count = total
        means.append(mean)
        counts.append(count)

    return np.repeat(np.array(means, dtype=float), counts)


def project_isotone_nonneg(y) -> np.ndarray:
    """ Projects ``y`` onto ``{w: w_1 >= w_2 >= ... >= w_n >= 0}``.

    Pooling followed by clamping the pooled values at zero is the exact projection onto this cone.
    The output is monotone without any tolerance.

    :raise DomainError: If ``y`` is empty or not a vector.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise DomainError("The projection needs a nonempty vector.")

    return np.maximum(_pava_nonincreasing(y), 0.0)


def project_block_isotone(y, block_len: int) -> np.ndarray:
    """ Projects each consecutive block of ``block_len`` entries of ``y`` independently onto the nonnegative
    nonincreasing cone.

    :raise DomainError: If ``block_len`` doesn't divide the length of ``y``.
    """
    y = np.asarray(y, dtype=float)
    block_len = int(block_len)

    if y.ndim != 1 or y.size == 0:
        raise DomainError("The projection needs a nonempty vector.")
    if block_len < 1 or y.size % block_len:
        raise DomainError(f"The block length {block_len} doesn't divide the dimension {y.size}.")

    return np.concatenate([
        project_isotone_nonneg(block) for block in y.reshape(-1, block_len)
    ])


def project_nonneg(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.maximum(y, 0.0)


class ConstraintKind(Enum):
    nonneg = "nonneg"
    isotone = "isotone"
    block_isotone = "block-isotone"
    custom = "custom"


class ConstraintSet:
    """ The set ``Omega`` the magnitudes ``|x|`` have to lie in.

    * ``ConstraintKind.nonneg`` - the nonnegative orthant, i.e. no constraint on ``x``
    * ``ConstraintKind.isotone`` - ``w_1 >= w_2 >= ... >= w_n >= 0``
    * ``ConstraintKind.block_isotone`` - each consecutive block of ``block_len`` entries is nonincreasing
      and nonnegative
    * ``ConstraintKind.custom`` - any set with a projection callable, see :meth:`custom`.
      The callable must project onto a subset of the orthant which is mapped onto itself by ``psi``.
    """

    def __init__(self, kind: ConstraintKind, dim: int, *,
                 block_len: Optional[int] = None,
                 projection: Optional[Projection] = None,
                 contains: Optional[Callable[[np.ndarray], bool]] = None) -> None:
        if not isinstance(kind, ConstraintKind):
            raise OrdSparseMisconfigured(f"{kind!r} is not a kind of constraint set.")

        try:
            dim = int(dim)
            if dim < 1:
                raise ValueError
        except (TypeError, ValueError):
            raise OrdSparseMisconfigured(f"The dimension {dim!r} isn't a positive integer.")

        if kind == ConstraintKind.block_isotone:
            try:
                block_len = int(block_len)
                if block_len < 1 or dim % block_len:
                    raise ValueError
            except (TypeError, ValueError):
                raise OrdSparseMisconfigured(f"The block length {block_len!r} must be a positive divisor of {dim}.")
        elif block_len is not None:
            raise OrdSparseMisconfigured("The block length only applies to block-isotone constraints.")

        if kind == ConstraintKind.custom and projection is None:
            raise OrdSparseMisconfigured("Custom constraint sets need a projection.")

        self._kind = kind
        self._dim = dim
        self._block_len = block_len
        self._projection = projection
        self._contains = contains

    @classmethod
    def nonneg(cls, dim: int) -> "ConstraintSet":
        return cls(ConstraintKind.nonneg, dim)

    @classmethod
    def isotone(cls, dim: int) -> "ConstraintSet":
        return cls(ConstraintKind.isotone, dim)

    @classmethod
    def block_isotone(cls, dim: int, block_len: int) -> "ConstraintSet":
        return cls(ConstraintKind.block_isotone, dim, block_len=block_len)

    @classmethod
    def custom(cls, projection: Union[str, Projection], dim: int) -> "ConstraintSet":
        """ A constraint set defined by a projection callable, or by an entry point pointing to one,
        e.g. ``"mypackage.sets:project_onto_box"``.

        Membership of such a set is tested as being a fixed point of the projection.

        :raise OrdSparseMisconfigured: If the entry point can't be parsed or loaded.
        """
        if isinstance(projection, str):
            try:
                entry_point = EntryPoint.from_string(projection, "projection")
            except BadEntryPoint:
                raise OrdSparseMisconfigured(f"Incorrectly defined projection entry point '{projection}'.")

            if entry_point.object_name is None:
                raise OrdSparseMisconfigured("The projection entry point must be an object, not a module.")

            try:
                projection = entry_point.load()
            except (ImportError, AttributeError):
                raise OrdSparseMisconfigured(f"The projection entry point '{entry_point}' can't be loaded.")

            logger.debug("Loaded custom projection %r", projection)

        if not callable(projection):
            raise OrdSparseMisconfigured(f"{projection!r} is not callable.")

        return cls(ConstraintKind.custom, dim, projection=projection)

    @classmethod
    def from_name(cls, name: str, dim: int, block_len: Optional[int] = None) -> "ConstraintSet":
        """ Builds the set from its command line name, ``nonneg``, ``isotone`` or ``block-isotone``.
        """
        try:
            kind = ConstraintKind(name)
        except ValueError:
            kind = None

        if kind is None or kind == ConstraintKind.custom:
            raise OrdSparseMisconfigured(f"Unknown constraint '{name}', use one of nonneg, isotone or block-isotone.")

        return cls(kind, dim, block_len=block_len if kind == ConstraintKind.block_isotone else None)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConstraintSet":
        return cls.from_name(data["kind"], data["dim"], data.get("block_len"))

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == ConstraintKind.custom:
            raise OrdSparseMisconfigured("Custom constraint sets can't be serialized.")
        return {"kind": self.kind.value, "dim": self.dim, "block_len": self.block_len}

    @property
    def kind(self) -> ConstraintKind:
        return self._kind

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def block_len(self) -> Optional[int]:
        return self._block_len

    @property
    def is_ordered(self) -> bool:
        return self.kind in {ConstraintKind.isotone, ConstraintKind.block_isotone}

    def __repr__(self):
        if self.kind == ConstraintKind.block_isotone:
            return f"ConstraintSet({self.kind.value}, dim={self.dim}, block_len={self.block_len})"
        return f"ConstraintSet({self.kind.value}, dim={self.dim})"

    def __eq__(self, other):
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return (self.kind, self.dim, self.block_len, self._projection) == \
            (other.kind, other.dim, other.block_len, other._projection)

    def __hash__(self):
        return hash((self.kind, self.dim, self.block_len))

    def _check_dim(self, w: np.ndarray):
        if w.shape != (self.dim, ):
            raise DomainError(f"Expected a vector of dimension {self.dim}, got shape {w.shape}.")

    def contains(self, w) -> bool:
        """ Exact membership test of ``w`` (no tolerance).

        :raise DomainError: On dimension mismatch.
        """
        w = np.asarray(w, dtype=float)
        self._check_dim(w)

        if self.kind == ConstraintKind.custom:
            if self._contains is not None:
                return bool(self._contains(w))
            return bool(np.array_equal(self.project(w), w))

        if np.any(w < 0) or np.any(np.isnan(w)):
            return False

        if self.kind == ConstraintKind.nonneg:
            return True

        if self.kind == ConstraintKind.isotone:
            return bool(np.all(w[:-1] >= w[1:]))

        blocks = w.reshape(-1, self.block_len)
        return bool(np.all(blocks[:, :-1] >= blocks[:, 1:]))

    def project(self, v) -> np.ndarray:
        """ Projects ``v`` onto ``psi(Omega)``, which equals ``Omega`` for all supported sets.

        :raise DomainError: On dimension mismatch.
        """
        v = np.asarray(v, dtype=float)
        self._check_dim(v)

        if self.kind == ConstraintKind.nonneg:
            return project_nonneg(v)
        if self.kind == ConstraintKind.isotone:
            return project_isotone_nonneg(v)
        if self.kind == ConstraintKind.block_isotone:
            return project_block_isotone(v, self.block_len)
        return np.asarray(self._projection(v), dtype=float)


def project_psi_omega(cs: ConstraintSet, v) -> np.ndarray:
    """ Projects ``v`` onto ``psi(Omega)`` for the constraint set ``cs``.
    """
    return cs.project(v)
