"""
log σ 上的超参数下降

默认是带 Barzilai-Borwein 初始步长和 Armijo 回溯的梯度下降；
lbfgs 选项交给 scipy 的 L-BFGS-B。两种方式只记录被接受的迭代，目标值单调不增。
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import optimize

from app.core.feature_map import BaseSample, embed
from app.core.skl.objective import SklProblem, objective_and_gradient
from app.core.skl.ridge import RidgeModel, solve_ridge
from app.models.run_config import OptimizerMethod, OptimizerOptions
from app.utils.exceptions import DimensionError, InitializationError, KernelForgeError, ParameterError
from app.utils.file_utils import write_csv
from app.utils.logger import get_logger

logger = get_logger(__name__)

ObjectiveFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]

TRACE_COLUMNS = ["iteration", "objective", "gradient_norm", "step_size"]


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    sigma: Tuple[float, ...]
    objective: float
    gradient_norm: float
    step_size: float


@dataclass
class OptimTrace:
    """每次被接受的迭代一条记录；第 0 条是初始点"""
    records: List[TraceRecord] = field(default_factory=list)
    converged: bool = False
    reason: str = ""

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def accepted_steps(self) -> int:
        return max(len(self.records) - 1, 0)

    def append(self, sigma: np.ndarray, objective: float, gradient_norm: float, step_size: float):
        self.records.append(TraceRecord(
            iteration=len(self.records),
            sigma=tuple(np.asarray(sigma, dtype=np.float64).tolist()),
            objective=float(objective),
            gradient_norm=float(gradient_norm),
            step_size=float(step_size),
        ))

    def to_csv(self, path: Union[str, Path]) -> Path:
        rows = ((r.iteration, r.objective, r.gradient_norm, r.step_size) for r in self.records)
        return write_csv(rows, TRACE_COLUMNS, path)


def _log_space(fun: ObjectiveFn) -> ObjectiveFn:
    # σ = exp(θ)，∂J/∂θ_i = σ_i·∂J/∂σ_i
    def wrapped(theta: np.ndarray) -> Tuple[float, np.ndarray]:
        sigma = np.exp(theta)
        value, grad = fun(sigma)
        return value, sigma * grad
    return wrapped


def _gradient_descent(fun: ObjectiveFn, theta: np.ndarray, value: float, grad: np.ndarray,
                      options: OptimizerOptions, trace: OptimTrace) -> np.ndarray:
    step = options.initial_step / max(1.0, float(np.linalg.norm(grad)))
    for iteration in range(1, options.max_iter + 1):
        g2 = float(grad @ grad)
        accepted = False
        for _ in range(options.max_backtracks):
            candidate = theta - step * grad
            try:
                new_value, new_grad = fun(candidate)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError, KernelForgeError):
                # σ 溢出或岭系统失效，当作不可接受的步长
                new_value = np.inf
            if np.isfinite(new_value) and new_value <= value - options.armijo * step * g2:
                accepted = True
                break
            step *= options.shrink

        if not accepted:
            trace.converged = False
            trace.reason = "line_search_stalled"
            logger.warning(f"线搜索找不到下降步长，停止 | 迭代: {iteration} | 目标: {value:.6e}")
            return theta

        s, y_diff = candidate - theta, new_grad - grad
        relative_change = abs(value - new_value) / max(abs(value), np.finfo(float).tiny)
        theta, value, grad = candidate, new_value, new_grad
        trace.append(np.exp(theta), value, np.linalg.norm(grad), step)
        logger.debug(f"SKL 迭代 | 迭代: {iteration} | 目标: {value:.6e} | 梯度范数: {np.linalg.norm(grad):.3e} | 步长: {step:.3e}")

        if relative_change < options.rel_tol:
            trace.converged, trace.reason = True, "relative_change"
            return theta
        if np.linalg.norm(grad) < options.grad_tol:
            trace.converged, trace.reason = True, "gradient_norm"
            return theta

        # Barzilai-Borwein 步长作为下一次回溯的起点
        sy = float(s @ y_diff)
        step = float(s @ s) / sy if sy > 0 else step * 2.0

    trace.reason = "max_iter"
    return theta


def _lbfgs(fun: ObjectiveFn, theta: np.ndarray, options: OptimizerOptions, trace: OptimTrace) -> np.ndarray:
    evaluations: Dict[bytes, Tuple[float, np.ndarray]] = {}

    def cached(x: np.ndarray) -> Tuple[float, np.ndarray]:
        key = np.asarray(x, dtype=np.float64).tobytes()
        if key not in evaluations:
            evaluations[key] = fun(np.asarray(x, dtype=np.float64))
        return evaluations[key]

    previous = {"x": theta.copy()}

    def record(intermediate_result: optimize.OptimizeResult):
        x = np.asarray(intermediate_result.x, dtype=np.float64)
        value, grad = cached(x)
        step = float(np.linalg.norm(x - previous["x"]))
        previous["x"] = x.copy()
        trace.append(np.exp(x), value, np.linalg.norm(grad), step)

    result = optimize.minimize(
        cached, theta, jac=True, method="L-BFGS-B", callback=record,
        options={"maxiter": options.max_iter, "ftol": options.rel_tol, "gtol": options.grad_tol},
    )
    trace.converged = bool(result.success)
    trace.reason = str(result.message)
    best = min(trace.records, key=lambda r: r.objective)
    return np.log(np.asarray(best.sigma))


def minimize_log_sigma(fun: ObjectiveFn, sigma_init, options: Optional[OptimizerOptions] = None) -> Tuple[np.ndarray, OptimTrace]:
    """
    在 θ = log σ 上最小化，σ 始终为正

    Args:
        fun: σ -> (目标, ∂J/∂σ)
        sigma_init: 初始 σ，逐元素为正
        options: 优化选项

    Returns:
        (最优 σ, 迭代记录)

    Raises:
        InitializationError: 初始点目标值不是有限数
    """
    options = options or OptimizerOptions()
    sigma_init = np.atleast_1d(np.asarray(sigma_init, dtype=np.float64))
    if not np.all(sigma_init > 0):
        raise ParameterError("sigma_init must be strictly positive")

    wrapped = _log_space(fun)
    theta = np.log(sigma_init)
    value, grad = wrapped(theta)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise InitializationError("objective is not finite at sigma_init", objective=float(value))

    trace = OptimTrace()
    trace.append(sigma_init, value, np.linalg.norm(grad), 0.0)
    if np.linalg.norm(grad) < options.grad_tol or options.max_iter == 0:
        trace.converged = bool(np.linalg.norm(grad) < options.grad_tol)
        trace.reason = "stationary_start" if trace.converged else "max_iter"
        return sigma_init, trace

    if options.method is OptimizerMethod.LBFGS:
        theta = _lbfgs(wrapped, theta, options, trace)
    else:
        theta = _gradient_descent(wrapped, theta, value, grad, options, trace)

    sigma = np.exp(theta)
    logger.info(f"超参数优化结束 | 方法: {options.method.value} | 接受步数: {trace.accepted_steps} | "
                f"目标: {trace.records[-1].objective:.6e} | 原因: {trace.reason}")
    if not trace.converged:
        logger.warning(f"超参数优化未收敛 | 原因: {trace.reason} | 最大迭代: {options.max_iter}")
    return sigma, trace


def learn_hyperparameters(problem: SklProblem, sigma_init, options: Optional[OptimizerOptions],
                          base: BaseSample) -> Tuple[np.ndarray, RidgeModel, OptimTrace]:
    """
    单核学习主循环：在验证目标上优化 σ，返回最优 σ 和对应的岭回归模型

    每一步都重新求解岭回归（不做热启动）。
    """
    sigma_init = np.atleast_1d(np.asarray(sigma_init, dtype=np.float64))
    if sigma_init.size != problem.m or base.m != problem.m:
        raise DimensionError("sigma_init, base sample and inputs must share the input dimension",
                             sigma_length=sigma_init.size, base_m=base.m, m=problem.m)

    sigma, trace = minimize_log_sigma(lambda s: objective_and_gradient(s, problem, base), sigma_init, options)
    spec = problem.spec(sigma)
    beta = solve_ridge(embed(problem.X, spec, base), problem.y, problem.lam)
    model = RidgeModel(beta=beta, lam=problem.lam, spec=spec, d=base.d, seed=base.seed)
    return sigma, model, trace
