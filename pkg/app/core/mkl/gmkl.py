"""
GMKL 交替最小化参考解（小规模）

min_{w,d≥0} Σ_t ||w_t||²/(2d_t) + C·Σ_i l(y_i, Σ_t ψ_t(x_i)ᵀw_t) + Σ_t d_t

w 步：固定 d 解光滑凸问题；d 步：闭式 d_t = ||w_t||₂/√2。
在 λ = √2/C 时，最优目标 / C 等于分组 Lasso 的最优目标。

primal 模式直接用特征分块；gram 模式用表示定理在 K_t = F_tF_tᵀ 上求解，
和基于核矩阵的 GMKL 求解器一样需要 O(rN²) 内存，只用于对照和规模基准。
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import linalg, optimize

from app.core.mkl.grouped import GroupedFeatures
from app.core.mkl.losses import loss_derivative, total_loss
from app.models.kernel_spec import LossKind, LossSpec
from app.models.run_config import GmklMode, GmklOptions
from app.utils.exceptions import DimensionError, ParameterError
from app.utils.logger import get_logger

logger = get_logger(__name__)

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class GmklResult:
    d: np.ndarray
    w: np.ndarray
    objective: float
    converged: bool
    iterations: int

    def __iter__(self):
        # 允许 d, w, objective = gmkl_reference(...)
        return iter((self.d, self.w, self.objective))


def gmkl_lambda(C: float) -> float:
    """与 GMKL 常数 C 等价的分组 Lasso 正则 λ = √2/C"""
    return SQRT2 / C


def weight_bound_gap(w_t: np.ndarray, d_t: float) -> float:
    """½||w_t||²/d_t + d_t − √2||w_t||₂ ≥ 0，仅在 d_t = ||w_t||₂/√2 处取等"""
    norm_sq = float(np.dot(w_t, w_t))
    return 0.5 * norm_sq / d_t + d_t - SQRT2 * np.sqrt(norm_sq)


def gmkl_objective(F: np.ndarray, y: np.ndarray, w: np.ndarray, d: np.ndarray, groups, C: float, loss: LossSpec) -> float:
    value = C * total_loss(y, F @ w, loss) + float(np.sum(d))
    for (start, stop), d_t in zip(groups, d):
        if d_t > 0:
            w_t = w[start:stop]
            value += 0.5 * float(w_t @ w_t) / d_t
    return value


def _primal_w_step(F: np.ndarray, y: np.ndarray, inv_d: np.ndarray, C: float, loss: LossSpec,
                   w0: np.ndarray, options: GmklOptions) -> np.ndarray:
    if loss.kind is LossKind.QUADRATIC:
        # (D⁻¹ + C·FᵀF) w = C·Fᵀy
        A = C * (F.T @ F)
        A[np.diag_indices_from(A)] += inv_d
        return linalg.cho_solve(linalg.cho_factor(A, lower=True), C * (F.T @ y))

    def fun(w):
        f = F @ w
        value = 0.5 * float(w @ (inv_d * w)) + C * total_loss(y, f, loss)
        grad = inv_d * w + C * (F.T @ loss_derivative(y, f, loss))
        return value, grad

    result = optimize.minimize(fun, w0, jac=True, method="L-BFGS-B",
                               options={"maxiter": options.inner_max_iter, "gtol": options.inner_grad_tol,
                                        "ftol": 1e-15})
    return result.x


def _gram_w_step(kernels: List[np.ndarray], d: np.ndarray, y: np.ndarray, C: float, loss: LossSpec,
                 alpha0: np.ndarray, options: GmklOptions) -> np.ndarray:
    K = sum(d_t * K_t for d_t, K_t in zip(d, kernels))
    n = y.size
    if loss.kind is LossKind.QUADRATIC:
        # α = C·(I + C·K_d)⁻¹y
        A = C * K
        A[np.diag_indices_from(A)] += 1.0
        return C * linalg.solve(A, y, assume_a="pos")

    def fun(alpha):
        f = K @ alpha
        value = 0.5 * float(alpha @ f) + C * total_loss(y, f, loss)
        grad = K @ (alpha + C * loss_derivative(y, f, loss))
        return value, grad

    result = optimize.minimize(fun, alpha0 if alpha0.size == n else np.zeros(n), jac=True, method="L-BFGS-B",
                               options={"maxiter": options.inner_max_iter, "gtol": options.inner_grad_tol,
                                        "ftol": 1e-15})
    return result.x


def gmkl_reference(gf: GroupedFeatures, y: np.ndarray, C: float, loss: Optional[LossSpec] = None,
                   options: Optional[GmklOptions] = None) -> GmklResult:
    """
    交替最小化求解 GMKL 原问题

    Args:
        gf: 分组特征（与分组 Lasso 使用同一组特征）
        y: 目标
        C: 损失权重 C > 0
        loss: 损失函数
        options: 迭代选项（模式、容差、冻结阈值）

    Returns:
        GmklResult(d, w, objective, converged, iterations)，objective 为原问题尺度
    """
    loss = loss or LossSpec()
    options = options or GmklOptions()
    if not C > 0:
        raise ParameterError("GMKL constant C must be positive", C=C)
    y = np.asarray(y, dtype=np.float64).ravel()
    F, groups = gf.F, gf.groups
    if F.shape[0] != y.size:
        raise DimensionError("feature rows must equal the number of targets", rows=F.shape[0], y_length=y.size)
    if y.size > options.max_n:
        raise DimensionError("GMKL reference is limited to small instances", n=y.size, limit=options.max_n)

    r = len(groups)
    d = np.ones(r)
    w = np.zeros(F.shape[1])
    alpha = np.zeros(y.size)
    kernels = [gf.block(t) @ gf.block(t).T for t in range(r)] if options.mode is GmklMode.GRAM else []

    objective = np.inf
    converged = False
    iteration = 0
    for iteration in range(1, options.max_outer + 1):
        active = d > 0
        if options.mode is GmklMode.GRAM:
            alpha = _gram_w_step(kernels, d, y, C, loss, alpha, options)
            w = np.zeros(F.shape[1])
            for t, (start, stop) in enumerate(groups):
                if active[t]:
                    w[start:stop] = d[t] * (gf.block(t).T @ alpha)
        else:
            cols = np.concatenate([np.arange(start, stop) for t, (start, stop) in enumerate(groups) if active[t]])
            inv_d = np.concatenate([np.full(stop - start, 1.0 / d[t])
                                    for t, (start, stop) in enumerate(groups) if active[t]])
            warm = w[cols]
            w = np.zeros(F.shape[1])
            w[cols] = _primal_w_step(F[:, cols], y, inv_d, C, loss, warm, options)

        # d 步：闭式解，过小的分组冻结为零
        d = np.array([np.linalg.norm(w[start:stop]) for start, stop in groups]) / SQRT2
        frozen = d < options.freeze_below
        d[frozen] = 0.0
        for t in np.flatnonzero(frozen):
            start, stop = groups[t]
            w[start:stop] = 0.0

        new_objective = gmkl_objective(F, y, w, d, groups, C, loss)
        relative_change = abs(objective - new_objective) / max(abs(new_objective), np.finfo(float).tiny)
        objective = new_objective
        logger.debug(f"GMKL 迭代 | 迭代: {iteration} | 目标: {objective:.12e} | 活跃核数: {int(np.sum(d > 0))}")
        if not np.any(d > 0):
            converged = True
            break
        if relative_change < options.rel_tol:
            converged = True
            break

    if converged:
        logger.info(f"GMKL 参考解收敛 | 模式: {options.mode.value} | 迭代: {iteration} | 目标: {objective:.10e}")
    else:
        logger.warning(f"GMKL 参考解未收敛 | 迭代: {iteration} | 目标: {objective:.10e}")
    return GmklResult(d=d, w=w, objective=float(objective), converged=converged, iterations=iteration)
