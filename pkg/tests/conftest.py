import os
import shutil
import tempfile
from collections import namedtuple
from pathlib import Path

import numpy as np
import pytest
from git import Repo

from ordsparse import Problem, Regularizer

TempRepo = namedtuple("TempRepo", ["repo", "repo_path", "file_path"])


@pytest.fixture(autouse=True)
def clean_environ(monkeypatch):
    """ Settings are read from the environment, tests mustn't see the ones of the developer.
    """
    for key in list(os.environ):
        if key.startswith("ORDSPARSE_") and key != "ORDSPARSE_SLOW_TESTS":
            monkeypatch.delenv(key)


@pytest.fixture()
def temp_repo():
    repo_path = Path(tempfile.mkdtemp())
    repo = Repo.init(str(repo_path))

    file_path = repo_path / "test_file.txt"
    file_path.write_text("Some test file")

    repo.index.add([str(file_path)])
    repo.index.commit("Initial")

    yield TempRepo(repo, repo_path, file_path)

    shutil.rmtree(str(repo_path))


@pytest.fixture()
def lp_problem():
    """ A small isotone lp instance with a sparse sorted signal.
    """
    rng = np.random.default_rng(1)
    A = rng.standard_normal((12, 20))
    A /= np.linalg.norm(A, axis=0)
    x_true = np.zeros(20)
    x_true[:4] = [2.0, -1.5, 1.0, -0.5]
    b = A @ x_true + 0.01 * rng.standard_normal(12)
    return Problem.least_squares(A, b, Regularizer.lp(0.5), 0.05, "isotone")
