import json
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Tuple, Union

import numpy as np
from dogpile.cache import make_region, CacheRegion

from .constraints import ConstraintKind
from .exceptions import OrdSparseMisconfigured
from .problem import Problem
from .result import RunResult
from .solver import BaseSolver
from .solver.base import Monitor
from .utils import load_class, Settings, NOT_SET, logger, LazySettingProperty, NotSet, convert_bool, hash_array

SolverDefinitionType = Union[Callable, BaseSolver, str, NotSet]


def _positive_int(value) -> int:
    value = int(value)
    if value < 1:
        raise ValueError
    return value


class OrdSparse:
    """ Basic interface of the library, solving problems with the configured solver and caching the results.

    Available settings:

    * **base_dir**: Directory where downloaded data and other files are stored (default: ``.ordsparse``)
    * **threads**: Number of problems solved concurrently by :meth:`solve_many` (default: ``1``)
    * **ignore_cache_errors**: Ignore all cache error initialization errors (default: ``False``)
    * **solver**: The default solver, a dotted path to its class (default: ``ordsparse.DMASolver``)
    * **cache_backend**, **cache_backend_arguments**, **cache_expiration_time**: The dogpile.cache region
      storing the results (default: no caching)
    """

    base_dir: str = LazySettingProperty(default=".ordsparse")
    threads: int = LazySettingProperty(default=1, convert=int)
    ignore_cache_errors: bool = LazySettingProperty(default=False, convert=convert_bool)

    def __init__(self, solver: SolverDefinitionType = NOT_SET,
                 settings=None,
                 base_dir=NOT_SET,
                 threads=NOT_SET,
                 ignore_cache_errors=NOT_SET) -> None:
        self.settings: Settings = Settings(settings)

        if ignore_cache_errors is not NOT_SET:
            self.ignore_cache_errors = convert_bool(ignore_cache_errors)

        if base_dir is not NOT_SET:
            self.base_dir = base_dir

        if threads is not NOT_SET:
            self.threads = threads

        try:
            self.threads = _positive_int(self.threads)
        except (TypeError, ValueError):
            raise OrdSparseMisconfigured(f"The number of threads {self.threads!r} isn't a positive integer.")

        self.region: CacheRegion = self.make_region()

        self.solver: BaseSolver = self.get_solver_instance(solver)

    def get_solver_instance(self, solver: SolverDefinitionType) -> BaseSolver:
        """ Returns a solver instance with this instance injected, either from the argument or from the settings.

        :raise OrdSparseMisconfigured: If the instance is not a subclass of :class:`BaseSolver`
        """
        if solver is NOT_SET:
            solver = self.get_setting("solver", "ordsparse.DMASolver")

        if isinstance(solver, str):
            solver = load_class(solver)

        if callable(solver):
            solver = solver()

        if not issubclass(type(solver), BaseSolver):
            raise OrdSparseMisconfigured(f"{type(solver)} is not an subclass of BaseSolver")

        if solver._ordsparse is not self:
            solver.inject(self)

        return solver

    def make_region(self) -> CacheRegion:
        """
        Returns a :class:`CacheRegion <dogpile.cache.region.CacheRegion>` based on settings.

        * Firstly, a backend is selected.
          The default is :class:`NullBackend <dogpile.cache.backends.null.NullBackend>`.
        * Secondly, arguments for the backends are generated.
          The arguments can be passed as a dict to the setting or as a json string.
          If the arguments aren't a dict or aren't convertible to a dict, :class:`OrdSparseMisconfigured` is raised.
        * Lastly, the cache is tested if it works

        All errors can be suppressed by the ``ignore_cache_errors`` setting.

        :raise ModuleNotFoundError: In case dogpile has trouble importing the library needed for a backend.
        :raise OrdSparseMisconfigured: In case the cache is misconfigured in any way or the cache doesn't work.
        """
        arguments = self.get_setting("cache_backend_arguments", None)

        def null_cache():
            return make_region().configure(
                "dogpile.cache.null"
            )

        if isinstance(arguments, str) and arguments:
            try:
                arguments = json.loads(arguments)
            except ValueError:
                if self.ignore_cache_errors:
                    return null_cache()
                raise OrdSparseMisconfigured("Cache backend arguments couldn't be converted to a dictionary.")

        cache_backend = self.get_setting("cache_backend", "dogpile.cache.null")

        try:
            if cache_backend == "dogpile.cache.dbm" and isinstance(arguments, dict) and "filename" in arguments:
                Path(arguments["filename"]).parent.mkdir(parents=True, exist_ok=True)

            region = make_region().configure(
                cache_backend,
                expiration_time=self.get_setting("cache_expiration_time", None),
                arguments=arguments
            )
            region.set("last_ordsparse_run", datetime.now().isoformat())
        except ModuleNotFoundError:
            if self.ignore_cache_errors:
                return null_cache()
            raise ModuleNotFoundError("Cache backend cannot load a required library.")
        except Exception:
            if self.ignore_cache_errors:
                return null_cache()
            raise OrdSparseMisconfigured("The provided cache is not working - most likely misconfigured.")

        return region

    def get_setting(self, key: str, default=NOT_SET):
        return self.settings.get(key, default=default)

    @property
    def data_dir(self) -> Path:
        return Path(self.base_dir) / "data"

    def cache_key(self, solver: BaseSolver, problem: Problem, x0: np.ndarray) -> str:
        """ Returns the key used for storing results in cache.
        """
        return "{solver}_{config}_{problem}_{x0}".format(solver=solver.name,
                                                         config=solver.config.hash,
                                                         problem=problem.hash,
                                                         x0=hash_array(x0))

    def solve(self, problem: Problem, x0=None, *,
              solver: SolverDefinitionType = NOT_SET,
              monitor: Optional[Monitor] = None) -> RunResult:
        """ Solves ``problem`` from ``x0`` (zero by default) with the configured solver, or with ``solver``.

        Runs with a ``monitor`` and problems with custom constraint sets are never cached.

        :return: A :class:`RunResult <ordsparse.result.RunResult>` with the final point and the trace.

        :raise InfeasiblePointError: If ``|x0|`` is not in the constraint set.
        :raise OrdSparseMisconfigured: If the solver can't handle the problem.
        :raise SolverFault: If the solver fails.
        """
        solver = self.solver if solver is NOT_SET else self.get_solver_instance(solver)
        x0 = np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=float)

        logger.info("Solving %r with %s", problem, solver.name)

        def create_value():
            logger.debug("Value not in cache, creating.")
            return solver.solve(problem, x0, monitor=monitor)

        if monitor is not None or problem.constraint.kind == ConstraintKind.custom:
            return create_value()

        cache_key = self.cache_key(solver, problem, x0)

        logger.debug("Cache key is %s", cache_key)

        return self.region.get_or_create(
            cache_key,
            create_value,
            should_cache_fn=self.should_cache_fn
        )

    def should_cache_fn(self, value: RunResult) -> bool:
        """
        Returns if the result ``value`` should be cached. By default, always returns ``True``, can be
        overriden.
        """
        return True

    def solve_many(self, jobs: Iterable[Tuple[Problem, Optional[np.ndarray]]], *,
                   solver: SolverDefinitionType = NOT_SET) -> List[RunResult]:
        """ Solves ``(problem, x0)`` pairs using ``threads`` worker threads, the results keep the order of ``jobs``.
        """
        jobs = list(jobs)
        solver = self.solver if solver is NOT_SET else self.get_solver_instance(solver)

        if self.threads == 1 or len(jobs) < 2:
            return [self.solve(problem, x0, solver=solver) for problem, x0 in jobs]

        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            return list(executor.map(lambda job: self.solve(job[0], job[1], solver=solver), jobs))
