""" The ``ordsparse`` command.

Exit codes: ``0`` on success, ``2`` for invalid configuration, data or arguments, ``3`` when a solver fails.
Failures are also reported as JSON on stderr.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from ._ordsparse import OrdSparse
from .constraints import ConstraintSet
from .diagnostics import psi_opt_residual
from .exceptions import DataError, DomainError, OrdSparseMisconfigured, SolverFault
from .problem import Problem, load_matrix, load_vector
from .regularizer import Regularizer
from .result import RunResult
from .solver import DMASolver, NPGSolver
from .utils import logger
from .experiments import lagged, synthetic
from .experiments.manifest import RunManifest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAULT = 3

SOLVERS = {"dma": DMASolver, "npg": NPGSolver}

_handler: Optional[logging.Handler] = None


def setup_logging(verbose: bool):
    global _handler
    if _handler is not None:
        logger.removeHandler(_handler)

    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    _handler.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.addHandler(_handler)


def add_problem_arguments(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("problem")
    group.add_argument("--problem", type=Path, help="Directory with a stored problem (A.npy, b.npy, problem.json).")
    group.add_argument("--A", dest="a_path", type=Path, help="The matrix A, CSV or .npy.")
    group.add_argument("--b", dest="b_path", type=Path, help="The vector b, CSV or .npy.")
    group.add_argument("--scale", type=float, default=1.0, help="Factor of the least squares term.")
    group.add_argument("--reg", choices=["l1", "lp", "log"], default="lp")
    group.add_argument("--p", type=float, default=0.5, help="Exponent of the lp regularizer.")
    group.add_argument("--eps", type=float, default=0.5, help="Parameter of the log regularizer.")
    group.add_argument("--omega", choices=["nonneg", "isotone", "block-isotone"], default="isotone")
    group.add_argument("--block-len", type=int, help="Block length of the block-isotone constraint.")
    group.add_argument("--lambda", dest="lam", type=float, help="Regularization parameter.")


def build_problem(args) -> Problem:
    """ :raise OrdSparseMisconfigured: If neither a stored problem nor A, b and lambda are given.
    """
    if args.problem is not None:
        problem = Problem.load(args.problem)
        if args.lam is not None:
            problem = problem.with_lambda(args.lam)
        return problem

    if args.a_path is None or args.b_path is None or args.lam is None:
        raise OrdSparseMisconfigured("Either --problem or all of --A, --b and --lambda are required.")

    A = load_matrix(args.a_path)
    b = load_vector(args.b_path)
    reg = Regularizer.from_name(args.reg, p=args.p, eps=args.eps)
    constraint = ConstraintSet.from_name(args.omega, A.shape[1], args.block_len)

    return Problem.least_squares(A, b, reg, args.lam, constraint, scale=args.scale)


def initial_point(value: str, problem: Problem) -> np.ndarray:
    """ ``zero``, ``random:<seed>`` (a Gaussian vector sorted by magnitude, blockwise for block constraints)
    or a path to a CSV or .npy file.
    """
    if value == "zero":
        return np.zeros(problem.dim)

    if value.startswith("random:"):
        try:
            seed = int(value.partition(":")[2])
        except ValueError:
            raise OrdSparseMisconfigured(f"Invalid initial point '{value}', the seed must be an integer.")
        return synthetic.sorted_initial_point(problem.dim, seed, problem.constraint.block_len)

    return load_vector(value)


def make_ordsparse(args) -> OrdSparse:
    settings = {}
    if args.cache_dir is not None:
        settings["ORDSPARSE_CACHE_BACKEND"] = "dogpile.cache.dbm"
        settings["ORDSPARSE_CACHE_BACKEND_ARGUMENTS"] = {"filename": str(args.cache_dir / "results.dbm")}
    return OrdSparse(settings=settings, threads=args.threads)


def write_csv(frame: pd.DataFrame, path: Path, manifest: RunManifest) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return manifest.add_output(path)


def cmd_solve(args, argv: List[str]) -> int:
    manifest = RunManifest(command=argv, root=args.out_dir, seeds=[args.seed])
    ordsparse = make_ordsparse(args)
    problem = build_problem(args)
    x0 = initial_point(args.x0, problem)

    settings = {"tol_step": args.tol, "eta_mode": args.eta_mode}
    if args.maxtime is not None:
        settings["max_time_s"] = args.maxtime
    if args.max_iters is not None:
        settings["max_iters"] = args.max_iters
    solver = SOLVERS[args.alg](**settings)

    result = ordsparse.solve(problem, x0, solver=solver)

    out_dir = args.out_dir
    manifest.config = {
        "solver": solver.name,
        "solver_config": solver.config.to_dict(),
        "problem": problem.to_dict(),
        "x0": args.x0,
    }

    manifest.add_output(result.to_csv(args.out or out_dir / "trace.csv"))
    write_csv(pd.DataFrame({"x": result.x}), out_dir / "x.csv", manifest)
    manifest.notes = {"reason": result.reason.value, "iterations": result.iterations, "objective": result.objective,
                      "last_eta": result.last_eta}
    manifest.write()

    print(json.dumps(manifest.notes))
    return EXIT_OK


def cmd_diag(args, argv: List[str]) -> int:
    problem = build_problem(args)
    x = load_vector(args.x)

    eta = args.eta
    if eta is None:
        if args.trace is None:
            raise OrdSparseMisconfigured("Either --eta or --trace is required.")
        eta = float(RunResult.read_trace(args.trace)["eta"].iloc[-1])

    report = psi_opt_residual(problem, x, eta, tol=args.tol)
    output = json.dumps(report.to_dict(), indent=2)

    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(output)

    print(output)
    return EXIT_OK


def cmd_bench_cs(args, argv: List[str]) -> int:
    manifest = RunManifest(command=argv, root=args.out_dir)
    triple = synthetic.CS_TRIPLES[args.triple]
    if args.triple in {"medium", "large"} and not args.full_scale:
        raise OrdSparseMisconfigured(f"The {args.triple} triple needs --full-scale.")

    n, m, s = args.n or triple.n, args.m or triple.m, args.s or triple.s
    maxtime = args.maxtime or triple.maxtime
    lam_lp = args.lam_lp or triple.lam_lp
    lam_log = args.lam_log or triple.lam_log
    seeds = [args.seed + i for i in range(args.instances)]

    ordsparse = make_ordsparse(args)
    result = synthetic.run_cs_benchmark(ordsparse, n, m, s, seeds=seeds, sigma=args.sigma, lam_lp=lam_lp,
                                        lam_log=lam_log, maxtime=maxtime, p=args.p, eps=args.eps,
                                        tol_step=args.tol, tune=args.tune, algorithms=args.algorithms,
                                        signal_entries=args.signal_entries)

    out_dir = args.out_dir
    manifest.seeds = seeds
    manifest.config = {
        "n": n, "m": m, "s": s, "sigma": args.sigma, "lam_lp": lam_lp, "lam_log": lam_log, "maxtime": maxtime,
        "p": args.p, "eps": args.eps, "tol_step": args.tol, "tune": args.tune,
        "algorithms": args.algorithms or list(synthetic.ALGORITHMS),
    }

    write_csv(result.curves, out_dir / "error_curves.csv", manifest)
    write_csv(result.errors, out_dir / "recovery_errors.csv", manifest)
    write_csv(result.signals, out_dir / "signals.csv", manifest)

    summary = result.errors.groupby("algorithm")["recovery_error"].mean()
    manifest.notes = {"mean_recovery_error": summary.to_dict()}
    manifest.write()

    print(summary.to_string())
    return EXIT_OK


def cmd_bench_lagged(args, argv: List[str]) -> int:
    manifest = RunManifest(command=argv, root=args.out_dir, seeds=[args.seed])
    ordsparse = make_ordsparse(args)

    if args.synthetic:
        frame = lagged.synthetic_laozone(seed=args.seed)
        K, N = args.K or lagged.SYNTHETIC_K, args.N or lagged.SYNTHETIC_N
        source = "synthetic"
    else:
        path = args.data or ordsparse.data_dir / lagged.LAOZONE_FILENAME
        if not Path(path).exists():
            if not args.fetch:
                raise DataError(f"The data file {path} doesn't exist, use --fetch to download it.")
            path = lagged.fetch_laozone(Path(path).parent)
        frame = lagged.load_laozone(path)
        K, N = args.K or lagged.DEFAULT_K, args.N or lagged.DEFAULT_N
        source = str(path)

    dataset = lagged.LaggedDataset.from_matrix(lagged.laozone_matrix(frame), K=K, N=N)

    if args.lambdas == "reference":
        lambdas = lagged.reference_lambdas()
    else:
        lambdas = lagged.lambda_grid(num=args.num_lambdas)

    result = lagged.run_lagged_benchmark(ordsparse, dataset, lambdas=lambdas, models=args.models, seed=args.seed,
                                         tol_step=args.tol)

    out_dir = args.out_dir
    manifest.config = {
        "data": source, "K": K, "N": N, "lambdas": args.lambdas, "num_lambdas": args.num_lambdas,
        "models": args.models or list(lagged.LAGGED_MODELS), "tol_step": args.tol,
        "validation_standardization": "validation set statistics",
    }

    write_csv(result.sweeps, out_dir / "lambda_sweep.csv", manifest)
    write_csv(result.best, out_dir / "best_lambda.csv", manifest)
    write_csv(result.predictions, out_dir / "predictions.csv", manifest)
    manifest.notes = {"best": result.best.to_dict(orient="records")}
    if args.lambdas == "reference" and not args.synthetic:
        comparison = lagged.compare_with_reference(result.best)
        write_csv(comparison, out_dir / "reference_comparison.csv", manifest)
        manifest.notes["reference_comparison"] = comparison.to_dict(orient="records")
    manifest.write()

    print(result.best.to_string(index=False))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ordsparse",
                                     description="Sparse regression under order constraints.")
    parser.add_argument("--out-dir", type=Path, default=Path("ordsparse-out"), help="Root for all outputs.")
    parser.add_argument("--threads", type=int, default=1, help="Number of problems solved in parallel.")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--cache-dir", type=Path, help="Cache solve results in a dbm file in this directory.")
    parser.add_argument("-v", "--verbose", action="store_true")

    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True

    solve = subparsers.add_parser("solve", help="Solve one problem and write the trace.")
    add_problem_arguments(solve)
    solve.add_argument("--alg", choices=sorted(SOLVERS), default="dma")
    solve.add_argument("--x0", default="zero", help="zero, random:<seed> or a file.")
    solve.add_argument("--tol", type=float, default=1e-6)
    solve.add_argument("--maxtime", type=float)
    solve.add_argument("--max-iters", type=int)
    solve.add_argument("--eta-mode", choices=["init", "inverse_gamma"], default="init")
    solve.add_argument("--out", type=Path, help="Path of the trace CSV, <out-dir>/trace.csv by default.")
    solve.set_defaults(handler=cmd_solve)

    diag = subparsers.add_parser("diag", help="Stationarity report of a point as JSON.")
    add_problem_arguments(diag)
    diag.add_argument("--x", required=True, help="The point, CSV or .npy.")
    diag.add_argument("--trace", type=Path, help="Trace of the run, its last eta is used.")
    diag.add_argument("--eta", type=float)
    diag.add_argument("--tol", type=float, default=1e-8)
    diag.add_argument("--out", type=Path)
    diag.set_defaults(handler=cmd_diag)

    bench_cs = subparsers.add_parser("bench-cs", help="Order constrained compressed sensing benchmark.")
    bench_cs.add_argument("--triple", choices=sorted(synthetic.CS_TRIPLES), default="desk")
    bench_cs.add_argument("--full-scale", action="store_true", help="Allow the medium and large triples.")
    bench_cs.add_argument("--n", type=int)
    bench_cs.add_argument("--m", type=int)
    bench_cs.add_argument("--s", type=int)
    bench_cs.add_argument("--instances", type=int, default=10)
    bench_cs.add_argument("--sigma", type=float, default=0.1)
    bench_cs.add_argument("--maxtime", type=float)
    bench_cs.add_argument("--lam-lp", type=float)
    bench_cs.add_argument("--lam-log", type=float)
    bench_cs.add_argument("--p", type=float, default=0.5)
    bench_cs.add_argument("--eps", type=float, default=0.5)
    bench_cs.add_argument("--tol", type=float, default=0.0,
                          help="Step tolerance, by default the runs stop at --maxtime.")
    bench_cs.add_argument("--tune", action="store_true", help="Tune lambda of every algorithm on a 5 point grid.")
    bench_cs.add_argument("--algorithms", nargs="+", choices=list(synthetic.ALGORITHMS))
    bench_cs.add_argument("--signal-entries", type=int)
    bench_cs.set_defaults(handler=cmd_bench_cs)

    bench_lagged = subparsers.add_parser("bench-lagged", help="Time-lagged regression on the ozone data.")
    source = bench_lagged.add_mutually_exclusive_group()
    source.add_argument("--data", type=Path, help="Path to LAozone.data.")
    source.add_argument("--synthetic", action="store_true", help="Use the synthetic stand-in.")
    bench_lagged.add_argument("--fetch", action="store_true", help="Download the data if missing.")
    bench_lagged.add_argument("--K", type=int)
    bench_lagged.add_argument("--N", type=int)
    bench_lagged.add_argument("--lambdas", choices=["sweep", "reference"], default="sweep")
    bench_lagged.add_argument("--num-lambdas", type=int, default=100)
    bench_lagged.add_argument("--models", nargs="+", choices=list(lagged.LAGGED_MODELS))
    bench_lagged.add_argument("--tol", type=float, default=1e-6)
    bench_lagged.set_defaults(handler=cmd_bench_lagged)

    return parser


def report_error(error: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(error).__name__, "message": str(error)}) + "\n")
    return code


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)

    setup_logging(args.verbose)

    try:
        return args.handler(args, ["ordsparse"] + argv)
    except (OrdSparseMisconfigured, DomainError, DataError) as e:
        logger.error("%s", e)
        return report_error(e, EXIT_CONFIG)
    except SolverFault as e:
        logger.error("%s", e)
        return report_error(e, EXIT_FAULT)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
