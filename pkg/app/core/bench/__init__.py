from app.core.bench.scaling import (
    SCALING_COLUMNS,
    SLOPE_COLUMNS,
    BenchRecord,
    BenchReport,
    SlopeFit,
    estimate_peak_memory_mb,
    fit_loglog_slope,
    run_scaling_bench,
)
from app.core.bench.synthetic import (
    PlantedMkl,
    PlantedSkl,
    default_bench_specs,
    make_planted_mkl_problem,
    make_planted_skl_problem,
)
from app.core.bench.verify import PropertyResult, VerifyReport, central_difference, run_verification

__all__ = [
    "BenchRecord",
    "BenchReport",
    "PlantedMkl",
    "PlantedSkl",
    "PropertyResult",
    "SCALING_COLUMNS",
    "SLOPE_COLUMNS",
    "SlopeFit",
    "VerifyReport",
    "central_difference",
    "default_bench_specs",
    "estimate_peak_memory_mb",
    "fit_loglog_slope",
    "make_planted_mkl_problem",
    "make_planted_skl_problem",
    "run_scaling_bench",
    "run_verification",
]
