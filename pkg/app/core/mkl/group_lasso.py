"""
分组 Lasso：min_w λΣ_t||w_t||₂ + Σ_i l(y_i, (Fw)_i)

加速近端梯度 + 回溯步长，目标上升时重启动量并退回普通近端梯度步，保证被接受的目标单调不增。
内存只有 O(N·Σd_t)，不构造任何 N×N 矩阵。
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.mkl.grouped import ColumnRange, GroupedFeatures, build_grouped_features
from app.core.mkl.losses import curvature_bound, loss_derivative, total_loss
from app.models.kernel_spec import KernelSpec, LossSpec
from app.models.run_config import ProxOptions
from app.utils.exceptions import ArtifactError, DimensionError, ParameterError
from app.utils.file_utils import load_json, save_json
from app.utils.logger import get_logger

logger = get_logger(__name__)

ARTIFACT_KIND = "group_lasso_model"
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class KernelWeights:
    """d_t = ||w_t||₂/√2"""
    d: np.ndarray


@dataclass(frozen=True)
class GroupedLinearModel:
    w: np.ndarray
    groups: List[ColumnRange]
    lam: float
    loss: LossSpec
    converged: bool = True
    iterations: int = 0
    objective: float = float("nan")
    kkt_residual: float = 0.0
    specs: List[KernelSpec] = field(default_factory=list)
    seeds: List[int] = field(default_factory=list)
    columns: List[Optional[ColumnRange]] = field(default_factory=list)

    def block(self, t: int) -> np.ndarray:
        start, stop = self.groups[t]
        return self.w[start:stop]

    def predict(self, gf: Union[GroupedFeatures, np.ndarray]) -> np.ndarray:
        F = gf.F if isinstance(gf, GroupedFeatures) else np.asarray(gf, dtype=np.float64)
        if F.shape[1] != self.w.size:
            raise DimensionError("feature columns must equal model weight length", columns=F.shape[1], w_length=self.w.size)
        return F @ self.w

    def predict_inputs(self, X: np.ndarray) -> np.ndarray:
        """按保存的核描述和种子重新嵌入原始输入后预测"""
        if len(self.specs) != len(self.groups) or len(self.seeds) != len(self.groups):
            raise ArtifactError("model does not carry the kernel specs and seeds needed to embed inputs")
        widths = [stop - start for start, stop in self.groups]
        columns = self.columns if len(self.columns) == len(self.groups) else None
        gf = build_grouped_features(X, self.specs, widths, seed=0, seeds=self.seeds, columns=columns)
        return self.predict(gf)

    def to_dict(self) -> dict:
        return {
            "kind": ARTIFACT_KIND,
            "lambda": self.lam,
            "loss": self.loss.model_dump(mode="json"),
            "converged": self.converged,
            "iterations": self.iterations,
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "kernel_weights": kernel_weights(self).d.tolist(),
            "groups": [
                {
                    "range": list(self.groups[t]),
                    "weights": self.block(t).tolist(),
                    "spec": self.specs[t].model_dump(mode="json") if t < len(self.specs) else None,
                    "seed": self.seeds[t] if t < len(self.seeds) else None,
                    "columns": list(self.columns[t]) if t < len(self.columns) and self.columns[t] else None,
                }
                for t in range(len(self.groups))
            ],
        }

    def save(self, path: Union[str, Path]) -> Path:
        return save_json(self.to_dict(), path)

    @classmethod
    def from_dict(cls, data: dict) -> "GroupedLinearModel":
        try:
            groups = [tuple(g["range"]) for g in data["groups"]]
            w = np.concatenate([np.asarray(g["weights"], dtype=np.float64) for g in data["groups"]])
            specs = [KernelSpec.model_validate(g["spec"]) for g in data["groups"] if g.get("spec")]
            seeds = [int(g["seed"]) for g in data["groups"] if g.get("seed") is not None]
            columns = [tuple(g["columns"]) if g.get("columns") else None for g in data["groups"]]
            model = cls(w=w, groups=groups, lam=float(data["lambda"]), loss=LossSpec.model_validate(data["loss"]),
                        converged=bool(data["converged"]), iterations=int(data["iterations"]),
                        objective=float(data["objective"]), kkt_residual=float(data["kkt_residual"]),
                        specs=specs, seeds=seeds, columns=columns)
        except (KeyError, TypeError, ValueError) as e:
            raise ArtifactError(f"corrupted group lasso model artifact: {e}")
        if groups and groups[-1][1] != w.size:
            raise ArtifactError("group ranges do not cover the weight vector")
        return model

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GroupedLinearModel":
        return cls.from_dict(load_json(path, kind=ARTIFACT_KIND))


def _group_norms(w: np.ndarray, groups: Sequence[ColumnRange]) -> np.ndarray:
    return np.array([np.linalg.norm(w[start:stop]) for start, stop in groups])


def block_prox(w: np.ndarray, groups: Sequence[ColumnRange], tau: float) -> np.ndarray:
    """分组软阈值：w_t ← max(0, 1 − τ/||w_t||₂)·w_t"""
    if not tau > 0:
        raise ParameterError("prox threshold must be positive", tau=tau)
    out = np.zeros_like(w, dtype=np.float64)
    for start, stop in groups:
        block = w[start:stop]
        norm = np.linalg.norm(block)
        if norm > tau:
            out[start:stop] = (1.0 - tau / norm) * block
    return out


def group_lasso_objective(F: np.ndarray, y: np.ndarray, w: np.ndarray, groups: Sequence[ColumnRange],
                          lam: float, loss: LossSpec) -> float:
    return float(lam * np.sum(_group_norms(w, groups)) + total_loss(y, F @ w, loss))


def lambda_max(F: np.ndarray, y: np.ndarray, groups: Sequence[ColumnRange], loss: LossSpec) -> float:
    """全零模型最优的最小 λ：max_t ||F_tᵀ l'(y, 0)||₂"""
    g = F.T @ loss_derivative(y, np.zeros_like(y, dtype=np.float64), loss)
    return float(np.max(_group_norms(g, groups)))


def block_optimality_residual(F: np.ndarray, y: np.ndarray, w: np.ndarray, groups: Sequence[ColumnRange],
                              lam: float, loss: LossSpec) -> float:
    """
    分块 KKT 条件的最大相对违背量

    零块: (||∇_t l||₂ − λ)/λ，非零块: ||∇_t l + λw_t/||w_t||₂||₂ / max(1, ||∇l||₂)
    """
    grad = F.T @ loss_derivative(y, F @ w, loss)
    scale = max(1.0, float(np.linalg.norm(grad)))
    worst = 0.0
    for start, stop in groups:
        g_t, w_t = grad[start:stop], w[start:stop]
        norm_w = np.linalg.norm(w_t)
        if norm_w == 0.0:
            worst = max(worst, (np.linalg.norm(g_t) - lam) / lam)
        else:
            worst = max(worst, np.linalg.norm(g_t + lam * w_t / norm_w) / scale)
    return float(worst)


def _spectral_norm_sq(F: np.ndarray, iterations: int = 50) -> float:
    # 幂迭代估计 ||F||₂²，只做矩阵向量积
    if F.size == 0:
        return 0.0
    v = np.ones(F.shape[1]) / np.sqrt(F.shape[1])
    estimate = 0.0
    for _ in range(iterations):
        u = F.T @ (F @ v)
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        estimate, v = norm, u / norm
    return float(estimate)


def train_group_lasso(gf: Union[GroupedFeatures, Tuple[np.ndarray, List[ColumnRange]]], y: np.ndarray, lam: float,
                      loss: Optional[LossSpec] = None, options: Optional[ProxOptions] = None) -> GroupedLinearModel:
    """
    加速近端梯度求解分组 Lasso

    终止条件：相对目标变化 < rel_tol 且分块 KKT 残差 ≤ kkt_tol；
    达到 max_iter 时返回 converged=False 的模型。
    """
    loss = loss or LossSpec()
    options = options or ProxOptions()
    if isinstance(gf, GroupedFeatures):
        F, groups = gf.F, gf.groups
        meta = dict(specs=list(gf.specs), seeds=[b.seed for b in gf.bases], columns=list(gf.columns))
    else:
        F, groups = gf
        meta = {}
    y = np.asarray(y, dtype=np.float64).ravel()
    if not lam > 0:
        raise ParameterError("group lasso lambda must be positive", lam=lam)
    if F.shape[0] != y.size:
        raise DimensionError("feature rows must equal the number of targets", rows=F.shape[0], y_length=y.size)

    def smooth(w: np.ndarray):
        f = F @ w
        return total_loss(y, f, loss), F.T @ loss_derivative(y, f, loss)

    def finish(w, iterations, objective, converged, kkt):
        if not converged:
            logger.warning(f"分组 Lasso 未收敛 | 迭代: {iterations} | KKT 残差: {kkt:.3e}")
        return GroupedLinearModel(w=w, groups=list(groups), lam=float(lam), loss=loss, converged=converged,
                                  iterations=iterations, objective=objective, kkt_residual=kkt, **meta)

    w = np.zeros(F.shape[1])
    lam_max = lambda_max(F, y, groups, loss)
    objective = group_lasso_objective(F, y, w, groups, lam, loss)
    if lam >= lam_max:
        logger.info(f"λ 不小于 λ_max，返回全零模型 | λ: {lam:.6e} | λ_max: {lam_max:.6e}")
        kkt = block_optimality_residual(F, y, w, groups, lam, loss)
        return finish(w, 0, objective, True, kkt)

    step = options.initial_step / max(curvature_bound(loss) * _spectral_norm_sq(F), np.finfo(float).tiny)
    z, momentum = w.copy(), 1.0
    kkt = np.inf

    def prox_step(point: np.ndarray, step: float):
        value, grad = smooth(point)
        for _ in range(options.max_backtracks):
            candidate = block_prox(point - step * grad, groups, step * lam)
            diff = candidate - point
            cand_value, _ = smooth(candidate)
            if cand_value <= value + grad @ diff + (diff @ diff) / (2.0 * step) + 1e-12 * abs(value):
                return candidate, cand_value, step
            step *= options.shrink
        return candidate, cand_value, step

    for iteration in range(1, options.max_iter + 1):
        candidate, smooth_value, step = prox_step(z, step)
        cand_objective = smooth_value + lam * np.sum(_group_norms(candidate, groups))

        if cand_objective > objective:
            # 动量导致目标上升：重启，从当前点做普通近端梯度步
            momentum = 1.0
            candidate, smooth_value, step = prox_step(w, step)
            cand_objective = smooth_value + lam * np.sum(_group_norms(candidate, groups))
            if cand_objective > objective:
                candidate, cand_objective = w, objective
            z = candidate.copy()
        else:
            next_momentum = (1.0 + np.sqrt(1.0 + 4.0 * momentum ** 2)) / 2.0
            z = candidate + ((momentum - 1.0) / next_momentum) * (candidate - w)
            momentum = next_momentum

        relative_change = abs(objective - cand_objective) / max(abs(objective), np.finfo(float).tiny)
        w, objective = candidate, float(cand_objective)
        if iteration % 100 == 0:
            logger.debug(f"分组 Lasso 迭代 | 迭代: {iteration} | 目标: {objective:.10e} | 步长: {step:.3e}")

        if relative_change < options.rel_tol:
            kkt = block_optimality_residual(F, y, w, groups, lam, loss)
            if kkt <= options.kkt_tol:
                logger.info(f"分组 Lasso 收敛 | 迭代: {iteration} | 目标: {objective:.10e} | KKT 残差: {kkt:.3e}")
                return finish(w, iteration, objective, True, kkt)

    kkt = block_optimality_residual(F, y, w, groups, lam, loss)
    return finish(w, options.max_iter, objective, kkt <= options.kkt_tol, kkt)


def kernel_weights(model: GroupedLinearModel) -> KernelWeights:
    """由分组权重恢复核权重 d_t = ||w_t||₂/√2"""
    return KernelWeights(d=_group_norms(model.w, model.groups) / SQRT2)
