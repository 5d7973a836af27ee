import json
import platform
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
import scipy

import ordsparse
from ..exceptions import DataError
from ..utils import hash_file, source_revision


def package_versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "ordsparse": ordsparse.__version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


@dataclass
class RunManifest:
    """ Describes one command run: how it was invoked, with which configuration and seeds, and what it produced.
    Every output is stored with its SHA256 checksum, so the files can be verified later.
    """

    command: List[str]
    root: Path
    config: Dict[str, Any] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)
    versions: Dict[str, str] = field(default_factory=package_versions)
    revision: Optional[Dict[str, Any]] = field(default_factory=source_revision)
    started: str = field(default_factory=lambda: datetime.now().isoformat())
    duration_s: Optional[float] = None
    outputs: Dict[str, str] = field(default_factory=dict)

    _start: float = field(default_factory=time.perf_counter, repr=False)

    def add_output(self, path: Union[str, Path]) -> Path:
        """ Registers an output file, relative to :attr:`root` if possible.

        :raise DataError: If the file doesn't exist.
        """
        path = Path(path)
        if not path.is_file():
            raise DataError(f"The output {path} doesn't exist.")

        try:
            name = str(path.resolve().relative_to(Path(self.root).resolve()))
        except ValueError:
            name = str(path.resolve())

        self.outputs[name] = hash_file(path)
        return path

    def finish(self):
        self.duration_s = time.perf_counter() - self._start

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "notes": self.notes,
            "versions": self.versions,
            "revision": self.revision,
            "started": self.started,
            "duration_s": self.duration_s,
            "outputs": self.outputs,
        }

    def write(self, filename: str = "manifest.json") -> Path:
        """ Finishes the timing and writes the manifest as JSON into :attr:`root`.
        """
        if self.duration_s is None:
            self.finish()

        path = Path(self.root) / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=str))
        return path

    @staticmethod
    def verify(path: Union[str, Path]) -> List[str]:
        """ Returns the outputs listed in the manifest at ``path`` which are missing or whose checksum changed.
        """
        path = Path(path)
        data = json.loads(path.read_text())

        changed = []
        for name, checksum in data.get("outputs", {}).items():
            output = Path(name) if Path(name).is_absolute() else path.parent / name
            if not output.is_file() or hash_file(output) != checksum:
                changed.append(name)
        return changed
