"""
ms-kernelforge 命令行入口

    python cli.py train-skl --config run.json
    python cli.py bench-scaling --n-grid 1000,3000,10000 --output-dir outputs/bench
"""

import argparse
import json
import os
import sys

# 线程上限要在 numpy 加载 BLAS 之前设置
_MAX_THREADS = os.getenv("KERNELFORGE_MAX_THREADS")
if _MAX_THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _MAX_THREADS)

from app.core.bench import SCALING_COLUMNS, SLOPE_COLUMNS  # noqa: E402
from app.core.skl import TRACE_COLUMNS  # noqa: E402
from app.models.run_config import RunConfig  # noqa: E402
from app.services import kernel_service  # noqa: E402
from app.utils.exceptions import ConfigError, KernelForgeError, VerificationError  # noqa: E402
from app.utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)

COMMAND_HELP = {
    "embed": "embed a dataset into random Fourier features (features.npy + metadata)",
    "train-skl": "learn single-kernel hyperparameters; writes model.json, base_sample.json, "
                 f"trace.csv ({','.join(TRACE_COLUMNS)}) and metrics.json",
    "train-mkl": "group-lasso multiple kernel learning; writes model.json and metrics.json with kernel weights",
    "predict": "predict with a saved model; writes predictions.csv (index,prediction,target)",
    "bench-scaling": f"time training against N; writes bench_scaling.csv ({','.join(SCALING_COLUMNS)}) "
                     f"and bench_slopes.csv ({','.join(SLOPE_COLUMNS)})",
    "verify-equivalence": "run the invariant suite; prints PASS/FAIL per property and writes verify.json",
}


def _n_grid(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"N grid must be comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernelforge", description="Random Fourier feature kernel learning toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMAND_HELP.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        sub.add_argument("--config", help="RunConfig JSON file")
        sub.add_argument("--seed", type=int, help="override config seed")
        sub.add_argument("--output-dir", help="directory for artifacts and metrics")
        sub.add_argument("--dataset", help="override dataset_path")
        sub.add_argument("--model", help="override model_path")
        sub.add_argument("--base-sample", help="override base_sample_path")
        sub.add_argument("--n-grid", type=_n_grid, help="comma-separated N grid for bench-scaling")
        sub.add_argument("--lambda-fraction", type=float, help="group lasso lambda as a fraction of lambda_max")
        sub.add_argument("--tolerance", type=float, help="tolerance scale for verify-equivalence (0 = exact)")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """读取配置文件并应用命令行覆盖项"""
    raw = {}
    if args.config:
        raw = json.loads(RunConfig.from_json_file(args.config).to_json())
    overrides = {
        "seed": args.seed,
        "output_dir": args.output_dir,
        "dataset_path": args.dataset,
        "model_path": args.model,
        "base_sample_path": args.base_sample,
        "lambda_fraction": args.lambda_fraction,
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if args.n_grid is not None:
        raw.setdefault("bench", {})["n_grid"] = args.n_grid
    if args.tolerance is not None:
        raw.setdefault("verify", {})["tolerance_scale"] = args.tolerance
    return RunConfig.from_dict(raw)


def _report_error(error: KernelForgeError) -> int:
    print(json.dumps(error.to_dict(), ensure_ascii=False), file=sys.stderr)
    return error.exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        record = kernel_service.execute(args.command, config)
    except VerificationError as e:
        for line in e.details.get("lines", []):
            print(line)
        return _report_error(e)
    except KernelForgeError as e:
        return _report_error(e)
    except (OSError, json.JSONDecodeError) as e:
        return _report_error(ConfigError(str(e)))

    if args.command == "verify-equivalence":
        for line in record.metrics["lines"]:
            print(line)
    else:
        print(json.dumps(record.metrics, indent=2, sort_keys=True, ensure_ascii=False))
    return 0


if __name__ == "__main__":
    sys.exit(main())
