"""
精确核岭回归的梯度式超参数学习（对照基线）

目标与随机特征版本相同：||K_UX α − v||² + ρ||σ||²，α = (K_XX + λI)⁻¹y。
需要 N×N 的 Gram 矩阵，只用于小规模对照和规模基准。
"""

from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from app.core.exact_kernels import gram, gram_derivative
from app.core.skl.objective import SklProblem
from app.core.skl.optimizer import OptimTrace, minimize_log_sigma
from app.core.skl.ridge import factorize_gram
from app.models.run_config import OptimizerOptions
from app.utils.exceptions import DimensionError


def _fit(sigma: np.ndarray, problem: SklProblem):
    K = gram(problem.family, sigma, problem.c, problem.X).values
    K_UX = gram(problem.family, sigma, problem.c, problem.U, problem.X).values
    A = K.copy()
    A[np.diag_indices_from(A)] += problem.lam
    factor, _ = factorize_gram(A)
    alpha = linalg.cho_solve(factor, problem.y, check_finite=False)
    return K_UX, factor, alpha


def krr_objective_and_gradient(sigma, problem: SklProblem) -> Tuple[float, np.ndarray]:
    """
    精确核版本的目标和梯度

    伴随量 z = A⁻¹K_UXᵀf，∂J/∂σ_i = 2fᵀ(∂K_UX α) − 2zᵀ(∂K_XX α) + 2ρσ_i
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    K_UX, factor, alpha = _fit(sigma, problem)
    f = K_UX @ alpha - problem.v
    z = linalg.cho_solve(factor, K_UX.T @ f, check_finite=False)

    grad = np.empty(sigma.size)
    for i in range(sigma.size):
        dK = gram_derivative(problem.family, sigma, problem.c, problem.X, problem.X, i)
        dK_UX = gram_derivative(problem.family, sigma, problem.c, problem.U, problem.X, i)
        grad[i] = 2.0 * f @ (dK_UX @ alpha) - 2.0 * z @ (dK @ alpha) + 2.0 * problem.rho * sigma[i]
    return float(f @ f + problem.rho * sigma @ sigma), grad


def krr_validation_objective(sigma, problem: SklProblem) -> float:
    sigma = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    K_UX, _, alpha = _fit(sigma, problem)
    f = K_UX @ alpha - problem.v
    return float(f @ f + problem.rho * sigma @ sigma)


def krr_validation_gradient(sigma, problem: SklProblem) -> np.ndarray:
    return krr_objective_and_gradient(sigma, problem)[1]


def learn_hyperparameters_krr(problem: SklProblem, sigma_init,
                              options: Optional[OptimizerOptions] = None) -> Tuple[np.ndarray, np.ndarray, OptimTrace]:
    """
    精确核岭回归上的超参数学习

    Returns:
        (最优 σ, 对偶系数 α, 迭代记录)
    """
    sigma_init = np.atleast_1d(np.asarray(sigma_init, dtype=np.float64))
    if sigma_init.size != problem.m:
        raise DimensionError("sigma_init length must equal the input dimension",
                             sigma_length=sigma_init.size, m=problem.m)
    sigma, trace = minimize_log_sigma(lambda s: krr_objective_and_gradient(s, problem), sigma_init, options)
    _, _, alpha = _fit(sigma, problem)
    return sigma, alpha, trace
