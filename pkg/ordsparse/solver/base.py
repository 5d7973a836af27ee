import math
import re
import time
from collections import deque
from dataclasses import dataclass, asdict
from enum import Enum
from itertools import count
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from cached_property import cached_property

from ..exceptions import DomainError, InfeasiblePointError, LineSearchError, OrdSparseMisconfigured
from ..problem import Problem
from ..result import IterationRecord, RunResult, TerminationReason
from ..utils import NOT_SET, LazySettingProperty, Settings, convert_bool, hash_json, logger

Monitor = Callable[[np.ndarray], float]

#: Relative rounding slack of the nonmonotone acceptance test
ACCEPTANCE_SLACK = 1e-13

#: Relative precision of ``A d`` in the Barzilai-Borwein denominator
CURVATURE_EPS = float(np.finfo(float).eps)


class EtaMode(Enum):
    init = "init"
    inverse_gamma = "inverse_gamma"


@dataclass(frozen=True)
class SolverConfig:
    """ Validated immutable snapshot of the solver settings, taken when a solve starts.

    :raise OrdSparseMisconfigured: If any of the positivity or ordering requirements is violated.
    """

    c1: float = 1e-4
    tau: float = 0.5
    M: int = 4
    gamma_min: float = 1e-8
    gamma_max: float = 1e8
    eta_lo: float = 1e-8
    eta_hi: float = 1.0
    eta_init: float = 1.0
    max_iters: int = 10_000
    max_time_s: float = math.inf
    tol_step: float = 1e-6
    eta_mode: EtaMode = EtaMode.init
    keep_iterates: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "eta_mode", EtaMode(getattr(self.eta_mode, "value", self.eta_mode)))
        except ValueError:
            raise OrdSparseMisconfigured(f"Unknown eta_mode '{self.eta_mode}', use init or inverse_gamma.")

        problems = []
        if not self.c1 > 0:
            problems.append("c1 must be positive")
        if not 0 < self.tau < 1:
            problems.append("tau must lie in (0, 1)")
        if int(self.M) != self.M or self.M < 0:
            problems.append("M must be a nonnegative integer")
        if not 0 < self.gamma_min <= self.gamma_max:
            problems.append("0 < gamma_min <= gamma_max must hold")
        if not 0 < self.eta_lo <= self.eta_hi:
            problems.append("0 < eta_lo <= eta_hi must hold")
        if not self.eta_lo <= self.eta_init <= self.eta_hi:
            problems.append("eta_init must lie in [eta_lo, eta_hi]")
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            problems.append("max_iters must be a nonnegative integer")
        if not self.max_time_s > 0:
            problems.append("max_time_s must be positive")
        if not self.tol_step >= 0:
            problems.append("tol_step must be nonnegative")

        if problems:
            raise OrdSparseMisconfigured("Invalid solver configuration: {}.".format("; ".join(problems)))

        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "max_iters", int(self.max_iters))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["eta_mode"] = self.eta_mode.value
        if math.isinf(self.max_time_s):
            data["max_time_s"] = None
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverConfig":
        data = dict(data)
        if data.get("max_time_s") is None:
            data["max_time_s"] = math.inf
        return cls(**data)

    @property
    def hash(self) -> str:
        return hash_json(self.to_dict())


@dataclass
class SolverState:
    """ The accepted iterate ``x^k`` with the quantities derived from it.
    ``v`` is maintained by the solvers, not recomputed, and equals ``psi(|x|)`` up to rounding.
    """

    x: np.ndarray
    v: np.ndarray
    residual: np.ndarray
    grad: np.ndarray
    objective: float
    k: int = 0


@dataclass
class Proposal:
    """ A trial point for the nonmonotone line search, with the ``eta`` its inner search accepted.
    """

    x: np.ndarray
    v: np.ndarray
    eta: float


def bb_stepsize(x_k: np.ndarray, x_km1: Optional[np.ndarray], A: np.ndarray, scale: float = 1.0,
                gamma_min: float = 1e-8, gamma_max: float = 1e8, A_norm: Optional[float] = None) -> float:
    """ The Barzilai-Borwein proposal ``||d||**2 / (scale ||A d||**2)`` with ``d = x_k - x_km1``,
    clipped to ``[gamma_min, gamma_max]``.

    Returns 1 if there's no previous iterate and ``gamma_max`` if ``A d`` vanishes, i.e. if ``||A d||`` is below
    the rounding error ``eps ||A||_F ||d||`` of the product. Pass the Frobenius norm ``A_norm`` to avoid
    recomputing it.
    """
    if x_km1 is None:
        return 1.0

    d = np.asarray(x_k, dtype=float) - np.asarray(x_km1, dtype=float)
    d_squared = float(d @ d)
    Ad_squared = float(np.sum((A @ d) ** 2))

    if A_norm is None:
        A_norm = float(np.linalg.norm(A))
    noise_floor = (CURVATURE_EPS * A_norm) ** 2 * d_squared
    if Ad_squared <= noise_floor:
        return gamma_max

    return min(max(d_squared / (scale * Ad_squared), gamma_min), gamma_max)


class BaseSolver:
    """ Abstract class for the solvers, implements the nonmonotone outer loop they share.

    Subclasses implement :meth:`propose`, which turns the current state and a stepsize ``gamma`` into a trial point.
    The trial point is accepted if ``F(trial) <= max(last M+1 objective values) - c1/2 ||trial - x||**2``,
    otherwise ``gamma`` is multiplied by ``tau``. The test allows a relative rounding error of
    :data:`ACCEPTANCE_SLACK`.

    Available settings, see :class:`SolverConfig` for the defaults:

    * **c1**: Sufficient decrease constant.
    * **tau**: Backtracking factor for both ``gamma`` and ``eta``.
    * **M**: Size of the nonmonotone window minus one, ``M = 0`` gives a monotone method.
    * **gamma_min**, **gamma_max**: Clipping range of the Barzilai-Borwein proposal.
    * **eta_lo**, **eta_hi**, **eta_init**: Range and initial value of the inner parameter ``eta``.
    * **eta_mode**: ``init`` starts every inner search from ``eta_init``, ``inverse_gamma`` from ``1/gamma``.
    * **max_iters**, **max_time_s**: Limits on the number of iterations and on the running time.
    * **tol_step**: The solver stops once ``||x^k - x^{k-1}|| / max(1, ||x^k||)`` drops below this value.
    * **keep_iterates**: Store all the iterates in the result.
    """

    #: Cap on the number of ``gamma`` backtracks in one iteration
    MAX_GAMMA_BACKTRACKS = 200

    c1: float = LazySettingProperty(default=SolverConfig.c1, convert=float)
    tau: float = LazySettingProperty(default=SolverConfig.tau, convert=float)
    M: int = LazySettingProperty(key="m", default=SolverConfig.M, convert=int)
    gamma_min: float = LazySettingProperty(default=SolverConfig.gamma_min, convert=float)
    gamma_max: float = LazySettingProperty(default=SolverConfig.gamma_max, convert=float)
    eta_lo: float = LazySettingProperty(default=SolverConfig.eta_lo, convert=float)
    eta_hi: float = LazySettingProperty(default=SolverConfig.eta_hi, convert=float)
    eta_init: float = LazySettingProperty(default=SolverConfig.eta_init, convert=float)
    max_iters: int = LazySettingProperty(default=SolverConfig.max_iters, convert=int)
    max_time_s: float = LazySettingProperty(default=SolverConfig.max_time_s, convert=float)
    tol_step: float = LazySettingProperty(default=SolverConfig.tol_step, convert=float)
    eta_mode: str = LazySettingProperty(default=SolverConfig.eta_mode.value, convert=lambda x: getattr(x, "value", x))
    keep_iterates: bool = LazySettingProperty(default=False, convert=convert_bool)

    def __init__(self, **settings) -> None:
        self._ordsparse = None
        self._explicit = set()
        self._settings = None

        for key, val in settings.items():
            if not self._is_setting(key):
                raise OrdSparseMisconfigured(f"{type(self).__name__} has no setting '{key}'.")
            if val is NOT_SET:
                continue
            descriptor = getattr(type(self), key)
            if descriptor.convert is not None:
                val = descriptor.convert(val)
            setattr(self, key, val)
            self._explicit.add(key)

    @classmethod
    def _is_setting(cls, key: str) -> bool:
        return isinstance(getattr(cls, key, None), LazySettingProperty)

    @classmethod
    def setting_names(cls) -> List[str]:
        return [key for key in dir(cls) if cls._is_setting(key)]

    @classmethod
    def from_config(cls, config: SolverConfig) -> "BaseSolver":
        data = config.to_dict()
        if data["max_time_s"] is None:
            data["max_time_s"] = math.inf
        return cls(**data)

    def inject(self, ordsparse):
        """ After the solver is set for a :class:`OrdSparse <ordsparse.OrdSparse>` instance, the instance is injected
        to the solver, so its settings are used. Values read before the injection are dropped, constructor values
        stay. Also runs validation of the configuration.
        """
        self._ordsparse = ordsparse

        for key in self.setting_names():
            if key not in self._explicit:
                self.__dict__.pop(key, None)

        self.validate_configuration()

    def validate_configuration(self):
        """ :raise OrdSparseMisconfigured: If the settings don't form a valid :class:`SolverConfig`.
        """
        return self.config

    @cached_property
    def snake_case_solver_name(self):
        """ CamelCase -> camel_case
        """
        s1 = re.sub('(.)([A-Z][a-z]+)', r'\1_\2', type(self).__name__)
        return re.sub('([a-z0-9])([A-Z])', r'\1_\2', s1).lower()

    @property
    def name(self) -> str:
        return self.snake_case_solver_name

    def get_settings_keys(self, key):
        """
        Parameters can be set through two settings keys, by a specific setting (eg. ``ORDSPARSE_DMA_SOLVER_TAU``)
        or a general ``ORDSPARSE_SOLVER_TAU``. This function returns the two keys that can be used for this setting.
        """
        return f"{self.snake_case_solver_name}_{key}", f"solver_{key}"

    def get_setting(self, key, default=NOT_SET):
        """ Gets a setting for the key, from the injected :class:`OrdSparse <ordsparse.OrdSparse>` instance
        or from the environment if the solver is used on its own.

        :raise KeyError: If the key is not set and default isn't provided.
        """
        if self._ordsparse is not None:
            settings = self._ordsparse.settings
        else:
            if self._settings is None:
                self._settings = Settings()
            settings = self._settings
        return settings.get(*self.get_settings_keys(key), default=default)

    @property
    def config(self) -> SolverConfig:
        return SolverConfig(
            c1=self.c1, tau=self.tau, M=self.M,
            gamma_min=self.gamma_min, gamma_max=self.gamma_max,
            eta_lo=self.eta_lo, eta_hi=self.eta_hi, eta_init=self.eta_init,
            max_iters=self.max_iters, max_time_s=self.max_time_s, tol_step=self.tol_step,
            eta_mode=self.eta_mode, keep_iterates=self.keep_iterates,
        )

    def check_problem(self, problem: Problem):
        """ Raises :class:`OrdSparseMisconfigured <ordsparse.exceptions.OrdSparseMisconfigured>` if the solver can't
        handle the problem.
        """
        if not isinstance(problem, Problem):
            raise OrdSparseMisconfigured(f"{problem!r} is not a Problem instance.")

    def initial_state(self, problem: Problem, x0) -> SolverState:
        """ :raise InfeasiblePointError: If ``|x0|`` is not in the constraint set.
        """
        if x0 is None:
            x = np.zeros(problem.dim)
        else:
            x = np.array(x0, dtype=float)

        if x.shape != (problem.dim, ):
            raise DomainError(f"The initial point must have shape ({problem.dim},), got {x.shape}.")

        if not problem.is_feasible(x):
            raise InfeasiblePointError("The initial point is not feasible, |x0| is not in the constraint set.",
                                       point=x)

        residual = problem.smooth.residual(x)
        return SolverState(
            x=x,
            v=np.asarray(problem.reg.psi(np.abs(x)), dtype=float).reshape(x.shape),
            residual=residual,
            grad=problem.smooth.gradient_from_residual(residual),
            objective=problem.objective_from_residual(x, residual),
            k=0,
        )

    def propose(self, state: SolverState, gamma: float, problem: Problem, config: SolverConfig) -> Proposal:
        """ Returns the trial point for the stepsize ``gamma``.

        Must be implemented by subclasses.
        """
        raise NotImplementedError

    def outer_step(self, state: SolverState, gamma: float, reference: float, problem: Problem,
                   config: SolverConfig) -> Tuple[SolverState, float, Proposal]:
        """ Runs the nonmonotone line search from the proposal ``gamma`` against the ``reference`` value,
        the maximum of the objective over the window.

        :return: The accepted state, the accepted ``gamma`` and the accepted proposal.
        :raise LineSearchError: If ``gamma`` had to be reduced more than ``MAX_GAMMA_BACKTRACKS`` times.
        """
        for backtracks in count():
            proposal = self.propose(state, gamma, problem, config)

            residual = problem.smooth.residual(proposal.x)
            objective = problem.objective_from_residual(proposal.x, residual)
            step = proposal.x - state.x
            threshold = reference - config.c1 / 2 * float(step @ step)

            if objective <= threshold + ACCEPTANCE_SLACK * max(1.0, abs(reference)):
                new_state = SolverState(
                    x=proposal.x,
                    v=proposal.v,
                    residual=residual,
                    grad=problem.smooth.gradient_from_residual(residual),
                    objective=objective,
                    k=state.k + 1,
                )
                return new_state, gamma, proposal

            if backtracks == self.MAX_GAMMA_BACKTRACKS:
                raise LineSearchError(
                    "The nonmonotone line search didn't accept any stepsize.",
                    extra_info={"iteration": state.k, "gamma": gamma, "objective": objective,
                                "threshold": threshold}
                )

            logger.debug("k=%s: rejected gamma=%.3e, F=%.6e > %.6e", state.k, gamma, objective, threshold)
            gamma *= config.tau

        raise AssertionError("unreachable")  # pragma: no cover

    def solve(self, problem: Problem, x0=None, monitor: Optional[Monitor] = None) -> RunResult:
        """ Runs the solver on ``problem`` from ``x0`` (zero by default).

        ``monitor`` is evaluated at every accepted iterate (e.g. the recovery error), its value is stored
        in the records and the time it takes isn't counted in ``time_s``.

        :raise InfeasiblePointError: If ``|x0|`` is not in the constraint set.
        :raise OrdSparseMisconfigured: If the configuration is invalid or the solver can't handle the problem.
        :raise SolverFault: If a line search fails.
        """
        config = self.config
        self.check_problem(problem)

        state = self.initial_state(problem, x0)
        previous_x = None
        A_norm = float(np.linalg.norm(problem.smooth.A))

        window = deque([state.objective], maxlen=config.M + 1)
        records = [IterationRecord(0, state.objective, math.nan, math.nan, math.nan, 0.0,
                                   None if monitor is None else float(monitor(state.x)))]
        iterates = [state.x.copy()] if config.keep_iterates else None

        logger.info("Starting %s on %r, F(x0)=%.6e", self.name, problem, state.objective)

        reason = TerminationReason.max_iters
        excluded = 0.0
        start = time.perf_counter()

        while state.k < config.max_iters:
            if time.perf_counter() - start - excluded >= config.max_time_s:
                reason = TerminationReason.max_time
                break

            gamma = bb_stepsize(state.x, previous_x, problem.smooth.A, problem.smooth.scale,
                                config.gamma_min, config.gamma_max, A_norm)

            new_state, gamma, proposal = self.outer_step(state, gamma, max(window), problem, config)
            elapsed = time.perf_counter() - start - excluded

            window.append(new_state.objective)
            step_norm = float(np.linalg.norm(new_state.x - state.x))

            metric = None
            if monitor is not None:
                monitor_start = time.perf_counter()
                metric = float(monitor(new_state.x))
                excluded += time.perf_counter() - monitor_start

            records.append(IterationRecord(new_state.k, new_state.objective, gamma, proposal.eta, step_norm,
                                           max(elapsed, np.nextafter(records[-1].time_s, math.inf)), metric))
            if iterates is not None:
                iterates.append(new_state.x.copy())

            previous_x, state = state.x, new_state

            if step_norm / max(1.0, float(np.linalg.norm(state.x))) < config.tol_step:
                reason = TerminationReason.converged
                break

        logger.info("%s stopped (%s) after %s iterations, F=%.6e", self.name, reason.value, state.k,
                    state.objective)

        return RunResult(
            x=state.x,
            records=records,
            reason=reason,
            solver=self.name,
            config=config.to_dict(),
            iterates=iterates,
        )
