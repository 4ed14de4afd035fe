"""
留出验证集上的平方误差目标及其解析梯度

J(σ) = ||φ(U)β(σ) − v||² + ρ||σ||²，β(σ) 是训练集上的岭回归解。
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from app.config import DEFAULT_RIDGE_LAMBDA, DEFAULT_SIGMA_RHO, DEFAULT_SKEW_OFFSET
from app.core.feature_map import BaseSample, Embedding
from app.core.skl.ridge import _solve
from app.models.kernel_spec import KernelFamily, KernelSpec
from app.utils.exceptions import DimensionError, ParameterError


@dataclass(frozen=True)
class SklProblem:
    """
    单核学习问题

    Attributes:
        X, y: 训练输入/目标
        U, v: 验证输入/目标
        rho: 超参数正则 ρ||σ||² 的权重
        lam: 岭回归 λ
        family, c: 核族和偏斜偏移（σ 由优化变量给出）
    """
    X: np.ndarray
    y: np.ndarray
    U: np.ndarray
    v: np.ndarray
    rho: float = DEFAULT_SIGMA_RHO
    lam: float = DEFAULT_RIDGE_LAMBDA
    family: KernelFamily = KernelFamily.GAUSSIAN
    c: float = DEFAULT_SKEW_OFFSET

    def __post_init__(self):
        for name in ("X", "U"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=np.float64)))
        for name in ("y", "v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64).ravel())
        if self.X.shape[1] != self.U.shape[1]:
            raise DimensionError("training and validation inputs must share columns",
                                 x_cols=self.X.shape[1], u_cols=self.U.shape[1])
        if self.X.shape[0] != self.y.size or self.U.shape[0] != self.v.size:
            raise DimensionError("targets must match input rows",
                                 x_rows=self.X.shape[0], y_length=self.y.size,
                                 u_rows=self.U.shape[0], v_length=self.v.size)
        if self.rho < 0:
            raise ParameterError("rho must be non-negative", rho=self.rho)
        if not self.lam > 0:
            raise ParameterError("ridge lambda must be positive", lam=self.lam)

    @property
    def m(self) -> int:
        return self.X.shape[1]

    def spec(self, sigma) -> KernelSpec:
        return KernelSpec(family=self.family, sigma=tuple(np.asarray(sigma, dtype=np.float64).ravel().tolist()), c=self.c)


def _residual(sigma, problem: SklProblem, base: BaseSample):
    spec = problem.spec(sigma)
    train = Embedding(problem.X, spec, base)
    valid = Embedding(problem.U, spec, base)
    Phi = train.features().values
    Phi_U = valid.features().values
    beta, factor = _solve(Phi, problem.y, problem.lam)
    f = Phi_U @ beta - problem.v
    return spec, train, valid, Phi, Phi_U, beta, factor, f


def validation_objective(sigma, problem: SklProblem, base: BaseSample) -> float:
    """||φ(U)β − v||² + ρ||σ||²"""
    sigma = np.asarray(sigma, dtype=np.float64)
    f = _residual(sigma, problem, base)[-1]
    return float(f @ f + problem.rho * sigma @ sigma)


def objective_and_gradient(sigma, problem: SklProblem, base: BaseSample) -> Tuple[float, np.ndarray]:
    """
    目标值和对 σ 的梯度

    ∂J/∂σ_i = 2fᵀ(∂φ(U)/∂σ_i·β + φ(U)·∂β/∂σ_i) + 2ρσ_i
    ∂β/∂σ_i = Q⁻¹((∂Φ/∂σ_i)ᵀy − (∂Q/∂σ_i)β)，∂Q/∂σ_i = (∂Φ)ᵀΦ + Φᵀ(∂Φ)
    Q 只分解一次，每个参数两次三角求解；∂Q·β 用矩阵向量积计算，不形成 d×d 的 ∂Q。
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    spec, train, valid, Phi, Phi_U, beta, factor, f = _residual(sigma, problem, base)
    fitted = Phi @ beta

    grad = np.empty(spec.m)
    for i in range(spec.m):
        dPhi = train.derivative(i)
        dPhi_U = valid.derivative(i)
        dQ_beta = dPhi.T @ fitted + Phi.T @ (dPhi @ beta)
        dbeta = linalg.cho_solve(factor, dPhi.T @ problem.y - dQ_beta, check_finite=False)
        grad[i] = 2.0 * f @ (dPhi_U @ beta + Phi_U @ dbeta) + 2.0 * problem.rho * sigma[i]

    return float(f @ f + problem.rho * sigma @ sigma), grad


def validation_gradient(sigma, problem: SklProblem, base: BaseSample) -> np.ndarray:
    return objective_and_gradient(sigma, problem, base)[1]
