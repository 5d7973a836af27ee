import hashlib
import importlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Callable, Union

import numpy as np

from .exceptions import OrdSparseMisconfigured


class NotSet:
    """ For default values which can't be ``None``.
    """
    def __repr__(self):
        return "NOT_SET"


NOT_SET = NotSet()

logger = logging.getLogger("ordsparse")
logger.setLevel(logging.DEBUG)


def load_class(location: str) -> type:
    """ Loads a class from a string and returns it.

    >>> from ordsparse.utils import load_class
    >>> load_class("ordsparse.solver.DMASolver")
    <class 'ordsparse.solver.dma.DMASolver'>

    :raise OrdSparseMisconfigured: If the class can't be loaded.
    """
    module_name, _, class_name = location.rpartition(".")

    if not module_name:
        raise OrdSparseMisconfigured(f"The module is not specified, can't load class from '{location}'")

    try:
        imported_module = importlib.import_module(module_name)
        return getattr(imported_module, class_name)
    except ModuleNotFoundError:
        raise OrdSparseMisconfigured(f"{module_name} does not exist.")
    except AttributeError:
        raise OrdSparseMisconfigured(f"{module_name} does not have a {class_name} class")


class LazySettingProperty:
    """
    For defining properties for the :class:`OrdSparse <ordsparse.OrdSparse>` class and for the solvers.
    The property is evaluated lazily when accessed, getting the value from settings
    using the instances method ``get_setting``. The property can be overridden by the constructor.
    """
    def __init__(self, *, key=None, default=NOT_SET, convert: Callable = None) -> None:
        self.key = key
        self.default = default
        self.convert = convert

    def __set_name__(self, cls, name):
        self.name = name
        if self.key is None:
            self.key = name

    def __get__(self, instance, cls):
        if instance is None:
            return self

        result = instance.get_setting(self.key, self.default)

        if self.convert is not None:
            result = self.convert(result)

        setattr(instance, self.name, result)
        return result


class Settings:
    """ A class for handling :class:`OrdSparse <ordsparse.OrdSparse>` and solver settings.
    """

    PREFIX = "ORDSPARSE"

    def __init__(self, data: Optional[Dict[str, Any]] = None) -> None:
        self._data = dict(data) if data else {}

        for key, val in os.environ.items():
            if key.startswith(Settings.PREFIX):
                self.set(key, val)

    def set(self, key, value):
        self._data[key] = value

    def get(self, *keys: str, default: Any = NOT_SET) -> Any:
        """ Returns values from the settings in the order of keys, the first value encountered is used.

        Example:

        >>> settings = Settings({"ORDSPARSE_ONE": 1, "ORDSPARSE_TWO": 2})
        >>> settings.get("one")
        1
        >>> settings.get("three", "two")
        2
        >>> settings.get("three", default=3)
        3

        :param keys: One or more keys to get from settings. If multiple keys are provided, the value of the first key
            that has a value is returned.
        :param default: If none of the ``keys`` are set, return this value.
        :return: A value from the settings or the default.

        :raise ValueError: If no keys are provided.
        :raise KeyError: If none of the keys are set and no default is provided.
        """
        if not len(keys):
            raise ValueError("At least one key must be provided.")

        for option in keys:
            key = f"{self.PREFIX}_{option.upper()}"
            if key in self._data:
                return self._data[key]

        if default is NOT_SET:
            raise KeyError("None of the following key is present in settings and no default is set: {}".format(
                ", ".join(keys)
            ))

        return default


def convert_bool(value: Any) -> bool:
    """ Converts settings values to bool, strings from environ variables included.
    """
    if isinstance(value, str):
        return value.strip().lower() not in {"", "0", "false", "no", "off"}
    return bool(value)


def hash_array(array: np.ndarray) -> str:
    """ Returns a SHA256 hash of the contents, shape and dtype of ``array``.
    """
    array = np.ascontiguousarray(array)
    digest = hashlib.sha256(str((array.shape, array.dtype.str)).encode("utf-8"))
    digest.update(array.tobytes())
    return digest.hexdigest()


def hash_json(data: Any) -> str:
    """ Returns a SHA256 hash of the canonical JSON serialization of ``data``.
    """
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()


def hash_file(path: Union[str, Path]) -> str:
    """ Returns a SHA256 hash of the file contents.
    """
    digest = hashlib.sha256()
    with Path(path).open("rb") as fl:
        for chunk in iter(lambda: fl.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def source_revision(path: Union[str, Path, None] = None) -> Optional[Dict[str, Any]]:
    """ Returns the commit hash and the dirty flag of the git checkout containing ``path`` (current directory
    by default), or ``None`` when it's not inside a git repository or GitPython can't run git.
    """
    try:
        from git import Repo, InvalidGitRepositoryError, NoSuchPathError, GitCommandError
    except ImportError:  # git executable missing
        return None

    try:
        repo = Repo(str(path or Path.cwd()), search_parent_directories=True)
        return {
            "commit": repo.head.object.hexsha,
            "dirty": is_dirty(repo),
        }
    except (InvalidGitRepositoryError, NoSuchPathError, GitCommandError, ValueError):
        return None


def is_dirty(repo) -> bool:
    """ Returns if the ``repo`` has been modified (including untracked files).
    """
    return repo.is_dirty(untracked_files=True)


class Unbounded:
    """ A tagged ``+infinity``, returned instead of a float infinity so it can't leak into arithmetic.
    """
    def __repr__(self):
        return "UNBOUNDED"

    def __bool__(self):
        return True


UNBOUNDED = Unbounded()
