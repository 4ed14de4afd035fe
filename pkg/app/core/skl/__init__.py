from app.core.skl.krr import (
    krr_objective_and_gradient,
    krr_validation_gradient,
    krr_validation_objective,
    learn_hyperparameters_krr,
)
from app.core.skl.objective import (
    SklProblem,
    objective_and_gradient,
    validation_gradient,
    validation_objective,
)
from app.core.skl.optimizer import (
    TRACE_COLUMNS,
    OptimTrace,
    TraceRecord,
    learn_hyperparameters,
    minimize_log_sigma,
)
from app.core.skl.ridge import RidgeModel, factorize_gram, solve_ridge

__all__ = [
    "OptimTrace",
    "RidgeModel",
    "SklProblem",
    "TRACE_COLUMNS",
    "TraceRecord",
    "factorize_gram",
    "krr_objective_and_gradient",
    "krr_validation_gradient",
    "krr_validation_objective",
    "learn_hyperparameters",
    "learn_hyperparameters_krr",
    "minimize_log_sigma",
    "objective_and_gradient",
    "solve_ridge",
    "validation_gradient",
    "validation_objective",
]
