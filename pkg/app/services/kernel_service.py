"""
命令层服务：CLI 和 HTTP 接口调用同一组函数

每个命令读取 RunConfig，把产物写到 output_dir，并返回 metrics 字典。
metrics.json 除 wall_time_seconds 外只依赖 (config, seed)，重复运行字节一致。
"""

import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from app.config import MAX_THREADS
from app.core.bench import run_scaling_bench, run_verification
from app.core.data_io import Dataset, load_dataset, split_train_validation
from app.core.feature_map import BaseSample, embed as embed_features, sample_base
from app.core.mkl import build_grouped_features, kernel_weights, lambda_max, train_group_lasso
from app.core.mkl.group_lasso import GroupedLinearModel
from app.core.skl import RidgeModel, SklProblem, learn_hyperparameters
from app.models.kernel_spec import KernelSpec
from app.models.run_config import RunConfig
from app.models.schemas import RunRecord, RunStatus
from app.utils.exceptions import ArtifactError, ConfigError, DimensionError, KernelForgeError, VerificationError
from app.utils.file_utils import load_json, save_json, write_csv
from app.utils.logger import clear_run_id, get_logger, log_execution_time, set_run_id
from app.utils.task_utils import RunRegistry, new_run_id

logger = get_logger(__name__)

Metrics = Dict[str, Any]
Artifacts = Dict[str, str]
Command = Callable[[RunConfig, Path], Tuple[Metrics, Artifacts]]

PREDICTION_COLUMNS = ["index", "prediction", "target"]


def _mse(prediction: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((prediction - target) ** 2))


def load_training_data(config: RunConfig) -> Tuple[Dataset, Dataset]:
    """读取训练集；没有单独的验证集文件时按 validation_fraction 切分"""
    if config.dataset_path is None:
        raise ConfigError("dataset_path is required for this command")
    dataset = load_dataset(config.dataset_path, m=config.input_dim)
    if config.validation_path is None:
        return split_train_validation(dataset, config.validation_fraction, config.seed)
    validation = load_dataset(config.validation_path, m=dataset.m)
    if validation.m != dataset.m:
        raise DimensionError("validation set must have the training input dimension",
                             train_m=dataset.m, validation_m=validation.m)
    return dataset, validation


def _single_spec(config: RunConfig, m: int) -> KernelSpec:
    kernel = config.kernels[0]
    if kernel.columns is not None:
        raise ConfigError("kernel column ranges only apply to multiple kernel learning")
    try:
        return kernel.to_spec(m)
    except ValueError as e:
        raise ConfigError(str(e))


def _write_metrics(metrics: Metrics, output_dir: Path) -> str:
    return str(save_json(metrics, output_dir / "metrics.json"))


@log_execution_time
def train_skl(config: RunConfig, output_dir: Path) -> Tuple[Metrics, Artifacts]:
    """单核超参数学习：σ 的梯度下降 + 最终岭回归模型"""
    train, valid = load_training_data(config)
    spec = _single_spec(config, train.m)
    base = sample_base(train.m, config.d, config.seed)
    problem = SklProblem(X=train.X, y=train.y, U=valid.X, v=valid.y, rho=config.rho,
                         lam=config.ridge_lambda, family=spec.family, c=spec.c)

    start = time.perf_counter()
    sigma, model, trace = learn_hyperparameters(problem, spec.sigma_array, config.optimizer, base)
    wall_time = time.perf_counter() - start

    artifacts = {
        "model": str(model.save(config.model_path or output_dir / "model.json")),
        "base_sample": str(base.save(config.base_sample_path or output_dir / "base_sample.json")),
        "trace": str(trace.to_csv(output_dir / "trace.csv")),
    }
    metrics = {
        "command": "train-skl",
        "family": spec.family.value,
        "sigma": sigma.tolist(),
        "sigma_init": spec.sigma_array.tolist(),
        "lambda": config.ridge_lambda,
        "rho": config.rho,
        "d": config.d,
        "seed": config.seed,
        "n_train": train.n,
        "n_validation": valid.n,
        "train_mse": _mse(model.predict(train.X, base), train.y),
        "validation_mse": _mse(model.predict(valid.X, base), valid.y),
        "validation_objective": trace.records[-1].objective,
        "iterations": trace.accepted_steps,
        "converged": trace.converged,
        "termination": trace.reason,
        "wall_time_seconds": wall_time,
    }
    artifacts["metrics"] = _write_metrics(metrics, output_dir)
    return metrics, artifacts


def _mkl_layout(config: RunConfig, train: Dataset) -> Tuple[List[KernelSpec], List[Optional[Tuple[int, int]]]]:
    columns = [k.columns for k in config.kernels]
    if all(c is None for c in columns) and train.groups and len(train.groups) == len(config.kernels):
        # 数据集里的描述子分块按顺序分给每个核
        columns = [tuple(g) for g in train.groups]
    specs = []
    for kernel, cols in zip(config.kernels, columns):
        width = train.m if cols is None else cols[1] - cols[0]
        try:
            specs.append(kernel.to_spec(width))
        except ValueError as e:
            raise ConfigError(str(e))
    return specs, columns


@log_execution_time
def train_mkl(config: RunConfig, output_dir: Path) -> Tuple[Metrics, Artifacts]:
    """多核学习：分组 Lasso + 核权重恢复"""
    train, valid = load_training_data(config)
    specs, columns = _mkl_layout(config, train)

    start = time.perf_counter()
    gf = build_grouped_features(train.X, specs, config.d, config.seed, columns=columns)
    lam_max = lambda_max(gf.F, train.y, gf.groups, config.loss)
    lam = config.mkl_lambda if config.mkl_lambda is not None else config.lambda_fraction * lam_max
    model = train_group_lasso(gf, train.y, lam, config.loss, config.prox)
    wall_time = time.perf_counter() - start

    weights = kernel_weights(model).d
    artifacts = {"model": str(model.save(config.model_path or output_dir / "model.json"))}
    metrics = {
        "command": "train-mkl",
        "kernels": [s.model_dump(mode="json") for s in specs],
        "kernel_weights": weights.tolist(),
        "active_kernels": [t for t, w in enumerate(weights) if w > 0],
        "lambda": lam,
        "lambda_max": lam_max,
        "loss": config.loss.model_dump(mode="json"),
        "d_per_kernel": config.d,
        "seed": config.seed,
        "n_train": train.n,
        "n_validation": valid.n,
        "objective": model.objective,
        "kkt_residual": model.kkt_residual,
        "train_mse": _mse(model.predict(gf), train.y),
        "validation_mse": _mse(model.predict_inputs(valid.X), valid.y),
        "iterations": model.iterations,
        "converged": model.converged,
        "wall_time_seconds": wall_time,
    }
    artifacts["metrics"] = _write_metrics(metrics, output_dir)
    return metrics, artifacts


@log_execution_time
def embed(config: RunConfig, output_dir: Path) -> Tuple[Metrics, Artifacts]:
    """把数据集嵌入成 N×d 特征矩阵，保存为 .npy 和元信息"""
    if config.dataset_path is None:
        raise ConfigError("dataset_path is required for this command")
    dataset = load_dataset(config.dataset_path, m=config.input_dim)
    spec = _single_spec(config, dataset.m)
    if config.base_sample_path is not None and Path(config.base_sample_path).is_file():
        base = BaseSample.load(config.base_sample_path)
    else:
        base = sample_base(dataset.m, config.d, config.seed)

    start = time.perf_counter()
    features = embed_features(dataset.X, spec, base, n_jobs=MAX_THREADS)
    wall_time = time.perf_counter() - start

    features_path = output_dir / "features.npy"
    output_dir.mkdir(parents=True, exist_ok=True)
    np.save(features_path, features.values)
    metrics = {
        "command": "embed",
        "spec": spec.model_dump(mode="json"),
        "spec_hash": features.spec_hash,
        "shape": list(features.shape),
        "seed": base.seed,
        "d": base.d,
        "wall_time_seconds": wall_time,
    }
    artifacts = {
        "features": str(features_path),
        "base_sample": str(base.save(output_dir / "base_sample.json")),
        "metrics": _write_metrics(metrics, output_dir),
    }
    return metrics, artifacts


def _predict_with(model_data: dict, config: RunConfig, X: np.ndarray) -> np.ndarray:
    kind = model_data.get("kind")
    if kind == "ridge_model":
        model = RidgeModel.from_dict(model_data)
        if config.base_sample_path is not None:
            base = BaseSample.load(config.base_sample_path)
        else:
            base = sample_base(model.spec.m, model.d, model.seed)
        return model.predict(X, base)
    if kind == "group_lasso_model":
        return GroupedLinearModel.from_dict(model_data).predict_inputs(X)
    raise ArtifactError(f"unsupported model artifact kind {kind!r}")


@log_execution_time
def predict(config: RunConfig, output_dir: Path) -> Tuple[Metrics, Artifacts]:
    """读取模型产物并对数据集预测；未给随机样本文件时按模型记录的种子重新生成"""
    if config.model_path is None:
        raise ConfigError("model_path is required for predict")
    if config.dataset_path is None:
        raise ConfigError("dataset_path is required for this command")
    dataset = load_dataset(config.dataset_path, m=config.input_dim)
    prediction = _predict_with(load_json(config.model_path), config, dataset.X)

    rows = ((i, float(p), float(t)) for i, (p, t) in enumerate(zip(prediction, dataset.y)))
    metrics = {"command": "predict", "n": dataset.n, "mse": _mse(prediction, dataset.y)}
    artifacts = {
        "predictions": str(write_csv(rows, PREDICTION_COLUMNS, output_dir / "predictions.csv")),
        "metrics": _write_metrics(metrics, output_dir),
    }
    return metrics, artifacts


@log_execution_time
def bench_scaling(config: RunConfig, output_dir: Path) -> Tuple[Metrics, Artifacts]:
    """规模扩展基准，输出计时 CSV 和斜率 CSV"""
    report = run_scaling_bench(config.bench, config.seed, config.loss)
    scaling_csv, slopes_csv = report.write_csv(output_dir)
    metrics = {"command": "bench-scaling", **report.to_dict()}
    artifacts = {
        "bench_scaling": str(scaling_csv),
        "bench_slopes": str(slopes_csv),
        "metrics": _write_metrics(metrics, output_dir),
    }
    return metrics, artifacts


@log_execution_time
def verify(config: RunConfig, output_dir: Path) -> Tuple[Metrics, Artifacts]:
    """
    运行不变量校验并写 verify.json

    Raises:
        VerificationError: 任一性质失败，details 里列出失败的性质
    """
    options = config.verify
    if options.artifact_path is None and config.model_path is not None:
        options = options.model_copy(update={"artifact_path": config.model_path})
    report = run_verification(options, config.seed)
    metrics = {"command": "verify-equivalence", **report.to_dict(),
               "lines": [r.line() for r in report.results]}
    artifacts = {"verify": str(report.write_json(output_dir / "verify.json"))}
    if not report.passed:
        raise VerificationError(f"{len(report.failures)} properties failed", failures=report.failures,
                                lines=metrics["lines"])
    return metrics, artifacts


COMMANDS: Dict[str, Command] = {
    "train-skl": train_skl,
    "train-mkl": train_mkl,
    "embed": embed,
    "predict": predict,
    "bench-scaling": bench_scaling,
    "verify-equivalence": verify,
}


def execute(command: str, config: RunConfig, registry: Optional[RunRegistry] = None,
            output_dir: Optional[Path] = None, run_id: Optional[str] = None) -> RunRecord:
    """
    执行一个命令并登记运行记录

    Args:
        command: COMMANDS 中的命令名
        config: 运行配置
        registry: 运行记录登记处，为空时不登记
        output_dir: 产物目录，默认 config.output_dir
        run_id: 运行ID，默认新生成

    Raises:
        KernelForgeError: 命令失败；失败记录先登记再抛出
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", available=sorted(COMMANDS))
    run_id = run_id or new_run_id()
    output_dir = Path(output_dir or config.output_dir)
    token = set_run_id(run_id)
    logger.info(f"开始运行 | 命令: {command} | 输出目录: {output_dir} | 种子: {config.seed}")
    try:
        metrics, artifacts = COMMANDS[command](config, output_dir)
    except KernelForgeError as e:
        if registry is not None:
            registry.save(RunRecord(run_id=run_id, command=command, status=RunStatus.FAILED,
                                    output_dir=str(output_dir), error=e.to_dict()))
        raise
    finally:
        clear_run_id(token)

    record = RunRecord(run_id=run_id, command=command, output_dir=str(output_dir),
                       artifacts=artifacts, metrics=metrics)
    if registry is not None:
        registry.save(record)
    return record
