from .synthetic import (CsInstance, ErrorCurve, ALGORITHMS, CS_TRIPLES, gen_cs_instance, sorted_initial_point,
                        cs_problem, error_curves, average_error_curves, run_cs_benchmark)
from .lagged import (LaggedDataset, Standardization, LAGGED_MODELS, build_lagged_dataset, standardize_fit,
                     predict_validation, lambda_grid, lambda_sweep, best_lambda, run_lagged_benchmark,
                     load_laozone, fetch_laozone, synthetic_laozone)
from .manifest import RunManifest

__all__ = ["CsInstance", "ErrorCurve", "ALGORITHMS", "CS_TRIPLES", "gen_cs_instance", "sorted_initial_point",
           "cs_problem", "error_curves", "average_error_curves", "run_cs_benchmark", "LaggedDataset",
           "Standardization", "LAGGED_MODELS", "build_lagged_dataset", "standardize_fit", "predict_validation",
           "lambda_grid", "lambda_sweep", "best_lambda", "run_lagged_benchmark", "load_laozone", "fetch_laozone",
           "synthetic_laozone", "RunManifest"]
