import json

import numpy as np
import pandas as pd
import pytest

from ordsparse import DMASolver
from ordsparse.cli import main, EXIT_OK, EXIT_CONFIG, EXIT_FAULT
from ordsparse.exceptions import LineSearchError
from ordsparse.experiments import RunManifest
from ordsparse.experiments.lagged import synthetic_laozone
from ordsparse.result import TRACE_COLUMNS
from common import random_least_squares


@pytest.fixture()
def data(tmp_path):
    A, b = random_least_squares(10, 16, seed=2)
    np.savetxt(tmp_path / "A.csv", A, delimiter=",")
    np.save(tmp_path / "b.npy", b)
    return tmp_path


def problem_arguments(data, *extra):
    return ["--A", str(data / "A.csv"), "--b", str(data / "b.npy"), "--lambda", "0.1", *extra]


def test_solve(data, capsys):
    out_dir = data / "out"

    code = main(["--out-dir", str(out_dir), "solve", *problem_arguments(data, "--x0", "random:3", "--maxtime", "5")])

    assert code == EXIT_OK

    trace = pd.read_csv(out_dir / "trace.csv")
    assert list(trace.columns) == TRACE_COLUMNS
    assert trace["k"].iloc[0] == 0

    x = pd.read_csv(out_dir / "x.csv")["x"].to_numpy()
    assert x.shape == (16, )
    assert np.all(np.diff(np.abs(x)) <= 1e-12)

    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["command"][:2] == ["ordsparse", "--out-dir"]
    assert manifest["seeds"] == [0]
    assert manifest["config"]["solver"] == "dma_solver"
    assert manifest["config"]["problem"]["constraint"]["kind"] == "isotone"
    assert set(manifest["outputs"]) == {"trace.csv", "x.csv"}
    assert RunManifest.verify(out_dir / "manifest.json") == []

    notes = json.loads(capsys.readouterr().out)
    assert notes["iterations"] == int(trace["k"].iloc[-1])
    assert notes["reason"] in {"converged", "max_iters", "max_time"}


def test_solve_npg(data):
    out = data / "elsewhere" / "npg.csv"

    code = main(["--out-dir", str(data / "out"), "solve", *problem_arguments(data, "--reg", "l1", "--omega", "nonneg"),
                 "--alg", "npg", "--max-iters", "5", "--out", str(out)])

    assert code == EXIT_OK
    assert out.exists()
    assert len(pd.read_csv(out)) <= 6


def test_solve_stored_problem(data, lp_problem):
    lp_problem.save(data / "problem")

    code = main(["--out-dir", str(data / "out"), "solve", "--problem", str(data / "problem"), "--lambda", "0.2",
                 "--max-iters", "3"])

    assert code == EXIT_OK
    manifest = json.loads((data / "out" / "manifest.json").read_text())
    assert manifest["config"]["problem"]["lambda"] == 0.2


@pytest.mark.parametrize("extra", [
    ["--reg", "lp", "--p", "0.9"],
    ["--reg", "log", "--eps", "0"],
    ["--omega", "block-isotone", "--block-len", "5"],
    ["--x0", "random:first"],
    ["--x0", "missing.csv"],
])
def test_solve_misconfigured(data, capsys, extra):
    code = main(["--out-dir", str(data / "out"), "solve", *problem_arguments(data, *extra)])

    assert code == EXIT_CONFIG
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert {"error", "message"} <= set(error)


def test_solve_rejects_large_exponent(data, capsys):
    code = main(["--out-dir", str(data / "out"), "solve", *problem_arguments(data, "--reg", "lp", "--p", "0.7")])

    assert code == EXIT_CONFIG
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "OrdSparseMisconfigured"
    assert "(0, 0.5]" in error["message"]
    assert "not locally Lipschitz" in error["message"]


def test_solve_missing_problem(data):
    assert main(["--out-dir", str(data / "out"), "solve", "--A", str(data / "A.csv")]) == EXIT_CONFIG


def test_invalid_arguments(data):
    with pytest.raises(SystemExit) as e:
        main(["solve", "--alg", "ista"])

    assert e.value.code == 2

    with pytest.raises(SystemExit) as e:
        main([])

    assert e.value.code == 2


def test_solver_fault(data, mocker, capsys):
    mocker.patch.object(DMASolver, "propose", side_effect=LineSearchError("The eta line search didn't accept."))

    code = main(["--out-dir", str(data / "out"), "solve", *problem_arguments(data, "--x0", "random:1")])

    assert code == EXIT_FAULT
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "LineSearchError"


def test_diag(data, capsys):
    out_dir = data / "out"
    assert main(["--out-dir", str(out_dir), "solve", *problem_arguments(data, "--omega", "nonneg")]) == EXIT_OK
    capsys.readouterr()

    code = main(["diag", *problem_arguments(data, "--omega", "nonneg"), "--x", str(out_dir / "x.csv"),
                 "--trace", str(out_dir / "trace.csv"), "--out", str(out_dir / "diag.json")])

    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report == json.loads((out_dir / "diag.json").read_text())
    assert report["eta_used"] > 0
    assert len(report["checks"]) == 16
    assert len(report["mu"]) == 16


def test_diag_without_eta(data):
    np.savetxt(data / "x.csv", np.zeros(16))

    assert main(["diag", *problem_arguments(data), "--x", str(data / "x.csv")]) == EXIT_CONFIG
    assert main(["diag", *problem_arguments(data), "--x", str(data / "x.csv"), "--eta", "0"]) == EXIT_CONFIG
    assert main(["diag", *problem_arguments(data), "--x", str(data / "x.csv"), "--eta", "1"]) == EXIT_OK


def test_bench_cs(tmp_path, capsys):
    out_dir = tmp_path / "cs"

    code = main(["--out-dir", str(out_dir), "--seed", "5", "bench-cs", "--n", "16", "--m", "8", "--s", "2",
                 "--instances", "2", "--maxtime", "0.5", "--algorithms", "DMA_lp", "NPG_L1"])

    assert code == EXIT_OK

    curves = pd.read_csv(out_dir / "error_curves.csv")
    assert list(curves.columns) == ["t", "DMA_lp", "NPG_L1"]

    errors = pd.read_csv(out_dir / "recovery_errors.csv")
    assert sorted(set(errors["seed"])) == [5, 6]

    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["seeds"] == [5, 6]
    assert manifest["config"]["n"] == 16
    assert set(manifest["outputs"]) == {"error_curves.csv", "recovery_errors.csv", "signals.csv"}

    assert "DMA_lp" in capsys.readouterr().out


def test_bench_cs_full_scale(tmp_path):
    assert main(["--out-dir", str(tmp_path), "bench-cs", "--triple", "large"]) == EXIT_CONFIG


def test_bench_lagged_synthetic(tmp_path):
    out_dir = tmp_path / "lagged"

    code = main(["--out-dir", str(out_dir), "--threads", "2", "bench-lagged", "--synthetic", "--num-lambdas", "3"])

    assert code == EXIT_OK

    sweep = pd.read_csv(out_dir / "lambda_sweep.csv")
    assert len(sweep) == 9

    best = pd.read_csv(out_dir / "best_lambda.csv")
    assert list(best["model"]) == ["DMA_q0.3", "DMA_q0.5", "NPG_q1"]

    predictions = pd.read_csv(out_dir / "predictions.csv")
    assert list(predictions.columns) == ["true", "DMA_q0.3", "DMA_q0.5", "NPG_q1"]

    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["config"]["data"] == "synthetic"
    assert manifest["config"]["K"] == 3


def test_bench_lagged_missing_data(tmp_path, mocker):
    get = mocker.patch("ordsparse.experiments.lagged.requests.get")

    code = main(["--out-dir", str(tmp_path), "bench-lagged", "--data", str(tmp_path / "LAozone.data")])

    assert code == EXIT_CONFIG
    get.assert_not_called()


def test_solve_infeasible_initial_point(data, capsys):
    x0 = np.zeros(16)
    x0[-1] = 1
    np.savetxt(data / "x0.csv", x0)

    code = main(["--out-dir", str(data / "out"), "solve", *problem_arguments(data, "--x0", str(data / "x0.csv"))])

    assert code == EXIT_CONFIG
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "InfeasiblePointError"


def test_bench_lagged_reference(tmp_path):
    path = tmp_path / "LAozone.data"
    synthetic_laozone().to_csv(path, index=False)
    out_dir = tmp_path / "lagged"

    code = main(["--out-dir", str(out_dir), "bench-lagged", "--data", str(path), "--K", "3", "--N", "13",
                 "--lambdas", "reference"])

    assert code == EXIT_OK

    comparison = pd.read_csv(out_dir / "reference_comparison.csv")
    assert list(comparison["model"]) == ["DMA_q0.3", "DMA_q0.5", "NPG_q1"]
    assert list(comparison["lambda"]) == pytest.approx([3.68e-3, 4.13e-3, 1.67e-2])
    assert list(comparison["reference_error"]) == pytest.approx([55.55, 56.17, 56.98])

    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert "reference_comparison.csv" in manifest["outputs"]
