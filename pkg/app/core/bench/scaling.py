"""
规模扩展基准

固定 d、r，按 N 网格计时四种训练方式：
- rff_skl: 随机特征单核超参数学习
- rff_gl: 随机特征分组 Lasso 多核学习
- gmkl_gram: 基于 Gram 矩阵的 GMKL 交替求解（小网格）
- krr_gd: 精确核岭回归的梯度超参数学习（小网格）
计时包含特征嵌入，不包含数据生成。每种方式在 log-log 坐标上拟合时间对 N 的斜率。
"""

import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from app.core.bench.synthetic import default_bench_specs, make_planted_mkl_problem, make_planted_skl_problem
from app.core.exact_kernels import gram
from app.core.feature_map import sample_base
from app.core.mkl import build_grouped_features, gmkl_reference, lambda_max, train_group_lasso
from app.core.skl import learn_hyperparameters, learn_hyperparameters_krr
from app.models.kernel_spec import LossKind, LossSpec
from app.models.run_config import BenchOptions, GmklMode, GmklOptions, OptimizerOptions, ProxOptions
from app.utils.exceptions import KernelForgeError
from app.utils.file_utils import write_csv
from app.utils.logger import get_logger

logger = get_logger(__name__)

SCALING_COLUMNS = ["method", "N", "d", "r", "seconds", "peak_memory_mb", "mse", "iterations", "status"]
SLOPE_COLUMNS = ["method", "slope", "residual", "points", "status"]

RFF_METHODS = ("rff_skl", "rff_gl")
EXACT_METHODS = ("gmkl_gram", "krr_gd")
MB = 1024.0 * 1024.0
BYTES = 8
# 固定迭代次数时收敛判据不应提前终止
NEVER_CONVERGE = 1e-300


@dataclass(frozen=True)
class BenchRecord:
    method: str
    N: int
    d: int
    r: int
    seconds: float
    peak_memory_mb: float
    mse: float
    iterations: int
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class SlopeFit:
    method: str
    slope: float
    residual: float
    points: int
    status: str = "ok"


@dataclass
class BenchReport:
    records: List[BenchRecord] = field(default_factory=list)
    slopes: List[SlopeFit] = field(default_factory=list)

    def slope(self, method: str) -> Optional[SlopeFit]:
        return next((s for s in self.slopes if s.method == method), None)

    def to_dict(self) -> dict:
        """NaN 写成 null，便于 JSON 输出"""
        return {"records": [_finite(asdict(r)) for r in self.records], "slopes": [_finite(asdict(s)) for s in self.slopes]}

    def write_csv(self, output_dir: Union[str, Path]) -> Tuple[Path, Path]:
        output_dir = Path(output_dir)
        scaling = write_csv(([getattr(r, c) for c in SCALING_COLUMNS] for r in self.records),
                            SCALING_COLUMNS, output_dir / "bench_scaling.csv")
        slopes = write_csv(([getattr(s, c) for c in SLOPE_COLUMNS] for s in self.slopes),
                           SLOPE_COLUMNS, output_dir / "bench_slopes.csv")
        return scaling, slopes


def _finite(row: dict) -> dict:
    return {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in row.items()}


def fit_loglog_slope(method: str, ns: List[int], seconds: List[float]) -> SlopeFit:
    """
    最小二乘拟合 log(时间) = slope·log(N) + b

    residual 是对数残差的均方根；不同 N 少于两个时 status 为 insufficient_points。
    """
    pairs = [(n, s) for n, s in zip(ns, seconds) if np.isfinite(s) and s > 0]
    if len({n for n, _ in pairs}) < 2:
        return SlopeFit(method=method, slope=float("nan"), residual=float("nan"), points=len(pairs),
                        status="insufficient_points")
    log_n = np.log([n for n, _ in pairs])
    log_t = np.log([s for _, s in pairs])
    slope, intercept = np.polyfit(log_n, log_t, 1)
    residual = float(np.sqrt(np.mean((log_t - (slope * log_n + intercept)) ** 2)))
    return SlopeFit(method=method, slope=float(slope), residual=residual, points=len(pairs))


def estimate_peak_memory_mb(method: str, n: int, d: int, r: int, m: int) -> float:
    """
    主要数组的内存估计（MB）

    随机特征方法是 O(Nd + d²)，Gram 方法是 O(rN²)。
    """
    if method == "rff_skl":
        # 训练/验证特征、导数和 d×d 系统
        elements = 4 * n * d + d * d + n * m
    elif method == "rff_gl":
        elements = 3 * n * r * d + n * m
    elif method == "gmkl_gram":
        elements = (r + 2) * n * n + n * r * d
    elif method == "krr_gd":
        elements = 4 * n * n + n * m
    else:
        raise ValueError(f"unknown bench method {method!r}")
    return elements * BYTES / MB


def _time_rff_skl(n: int, options: BenchOptions, seed: int) -> Tuple[float, float, int]:
    planted = make_planted_skl_problem(n, max(n // 2, 1), m=options.m, seed=seed)
    problem = planted.problem
    opt = OptimizerOptions(max_iter=options.skl_max_iter, rel_tol=NEVER_CONVERGE, grad_tol=0.0)
    start = time.perf_counter()
    base = sample_base(options.m, options.d, seed)
    _, model, trace = learn_hyperparameters(problem, np.ones(options.m), opt, base)
    seconds = time.perf_counter() - start
    residual = model.predict(problem.U, base) - problem.v
    return seconds, float(np.mean(residual ** 2)), trace.accepted_steps


def _time_rff_gl(n: int, options: BenchOptions, seed: int, loss: LossSpec) -> Tuple[float, float, int]:
    planted = make_planted_mkl_problem(n, m=options.m, r=options.r, d_per_kernel=options.d, seed=seed)
    specs = default_bench_specs(options.r, options.m)
    prox = ProxOptions(max_iter=options.gl_max_iter, rel_tol=NEVER_CONVERGE)
    start = time.perf_counter()
    gf = build_grouped_features(planted.X, specs, options.d, seed)
    lam = 0.1 * lambda_max(gf.F, planted.y, gf.groups, loss)
    model = train_group_lasso(gf, planted.y, lam, loss, prox)
    seconds = time.perf_counter() - start
    return seconds, float(np.mean((model.predict(gf) - planted.y) ** 2)), model.iterations


def _time_gmkl_gram(n: int, options: BenchOptions, seed: int) -> Tuple[float, float, int]:
    planted = make_planted_mkl_problem(n, m=options.m, r=options.r, d_per_kernel=options.d, seed=seed)
    specs = default_bench_specs(options.r, options.m)
    gmkl = GmklOptions(mode=GmklMode.GRAM, max_outer=options.gmkl_max_outer, rel_tol=NEVER_CONVERGE)
    quadratic = LossSpec(kind=LossKind.QUADRATIC)
    start = time.perf_counter()
    gf = build_grouped_features(planted.X, specs, options.d, seed)
    result = gmkl_reference(gf, planted.y, C=1.0, loss=quadratic, options=gmkl)
    seconds = time.perf_counter() - start
    return seconds, float(np.mean((gf.F @ result.w - planted.y) ** 2)), result.iterations


def _time_krr_gd(n: int, options: BenchOptions, seed: int) -> Tuple[float, float, int]:
    planted = make_planted_skl_problem(n, max(n // 2, 1), m=options.m, seed=seed)
    problem = planted.problem
    opt = OptimizerOptions(max_iter=options.skl_max_iter, rel_tol=NEVER_CONVERGE, grad_tol=0.0)
    start = time.perf_counter()
    sigma, alpha, trace = learn_hyperparameters_krr(problem, np.ones(options.m), opt)
    seconds = time.perf_counter() - start
    K_UX = gram(problem.family, sigma, problem.c, problem.U, problem.X).values
    return seconds, float(np.mean((K_UX @ alpha - problem.v) ** 2)), trace.accepted_steps


def _run_method(method: str, n: int, options: BenchOptions,
                timer: Callable[[], Tuple[float, float, int]]) -> BenchRecord:
    d = options.d
    r = 1 if method in ("rff_skl", "krr_gd") else options.r
    best: Optional[Tuple[float, float, int]] = None
    try:
        for _ in range(options.repeats):
            result = timer()
            if best is None or result[0] < best[0]:
                best = result
    except (KernelForgeError, MemoryError, ArithmeticError, np.linalg.LinAlgError) as e:
        logger.warning(f"基准单次运行失败 | 方法: {method} | N: {n} | 错误: {e}")
        return BenchRecord(method=method, N=n, d=d, r=r, seconds=float("nan"),
                           peak_memory_mb=estimate_peak_memory_mb(method, n, d, r, options.m),
                           mse=float("nan"), iterations=0, status=f"failed: {type(e).__name__}")

    seconds, mse, iterations = best
    logger.info(f"基准完成 | 方法: {method} | N: {n} | 耗时: {seconds:.4f}s | MSE: {mse:.4e}")
    return BenchRecord(method=method, N=n, d=d, r=r, seconds=float(seconds),
                       peak_memory_mb=estimate_peak_memory_mb(method, n, d, r, options.m),
                       mse=mse, iterations=int(iterations))


def run_scaling_bench(options: Optional[BenchOptions] = None, seed: int = 0,
                      loss: Optional[LossSpec] = None) -> BenchReport:
    """
    按网格运行全部方法并拟合斜率，单次失败只记录不中断
    """
    options = options or BenchOptions()
    loss = loss or LossSpec()
    timers: Dict[str, Callable[[int], Tuple[float, float, int]]] = {
        "rff_skl": lambda n: _time_rff_skl(n, options, seed),
        "rff_gl": lambda n: _time_rff_gl(n, options, seed, loss),
        "gmkl_gram": lambda n: _time_gmkl_gram(n, options, seed),
        "krr_gd": lambda n: _time_krr_gd(n, options, seed),
    }
    plan = [(method, options.n_grid) for method in RFF_METHODS]
    if options.include_exact:
        plan += [(method, options.exact_n_grid) for method in EXACT_METHODS]

    report = BenchReport()
    for method, grid in plan:
        records = [_run_method(method, n, options, lambda n=n: timers[method](n)) for n in grid]
        report.records.extend(records)
        ok = [rec for rec in records if rec.ok]
        fit = fit_loglog_slope(method, [rec.N for rec in ok], [rec.seconds for rec in ok])
        report.slopes.append(fit)
        logger.info(f"斜率拟合 | 方法: {method} | 斜率: {fit.slope:.3f} | 残差: {fit.residual:.3f} | 状态: {fit.status}")
    return report
