from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .exceptions import DataError

TRACE_COLUMNS = ["k", "F", "gamma", "eta", "step_norm", "time_s"]


class TerminationReason(Enum):
    converged = "converged"
    max_iters = "max_iters"
    max_time = "max_time"


@dataclass(frozen=True)
class IterationRecord:
    """ One line of the trace. ``k = 0`` describes the initial point, its ``gamma``, ``eta`` and ``step_norm``
    are ``nan`` and ``time_s`` is zero.
    """

    k: int
    objective: float
    gamma: float
    eta: float
    step_norm: float
    time_s: float
    metric: Optional[float] = None


@dataclass
class RunResult:
    """ For storing the outcome of a solve: the final point, the per-iteration trace and the reason the solver stopped.
    The records are only appended to, ``k`` and ``time_s`` are increasing.
    """

    #: The final iterate
    x: np.ndarray

    #: The trace, one record per accepted iterate including the initial point
    records: List[IterationRecord]

    #: Why the solver stopped
    reason: TerminationReason

    #: Name of the solver which produced the result
    solver: str = ""

    #: JSON-serializable snapshot of the configuration used
    config: Dict[str, Any] = field(default_factory=dict)

    #: The iterates ``x^0, x^1, ...`` if the solver was told to keep them
    iterates: Optional[List[np.ndarray]] = None

    @property
    def iterations(self) -> int:
        return self.records[-1].k

    @property
    def objective(self) -> float:
        return self.records[-1].objective

    @property
    def last_gamma(self) -> float:
        return self.records[-1].gamma

    @property
    def last_eta(self) -> float:
        """ The last accepted ``eta``, the natural choice for :func:`ordsparse.diagnostics.psi_opt_residual`.
        """
        return self.records[-1].eta

    @property
    def converged(self) -> bool:
        return self.reason == TerminationReason.converged

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(record) for record in self.records])
        frame = frame.rename(columns={"objective": "F"})

        columns = list(TRACE_COLUMNS)
        if any(record.metric is not None for record in self.records):
            columns.append("metric")
        return frame[columns]

    def to_csv(self, path: Union[str, Path]) -> Path:
        """ Writes the trace with the columns ``k, F, gamma, eta, step_norm, time_s`` (plus ``metric`` when a monitor
        was used).
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    @staticmethod
    def read_trace(path: Union[str, Path]) -> pd.DataFrame:
        """ Reads a trace written by :meth:`to_csv`.

        :raise DataError: If the file is missing or some of the columns are.
        """
        try:
            frame = pd.read_csv(path)
        except (OSError, ValueError) as e:
            raise DataError(f"Can't read the trace {path}: {e}")

        missing = set(TRACE_COLUMNS) - set(frame.columns)
        if missing:
            raise DataError(f"The trace {path} is missing the columns {', '.join(sorted(missing))}.")

        return frame
