"""
分组 Lasso 用的光滑损失

ε-IGLL: (1/γ)ln(1+e^{γ(f−y−ε)}) + (1/γ)ln(1+e^{γ(y−f−ε)}) − (2/γ)ln(1+e^{−γε})
平方损失: ½(f−y)²
所有 softplus 都用 logaddexp 计算，不会溢出。
"""

from typing import Union

import numpy as np
from scipy import special

from app.models.kernel_spec import LossKind, LossSpec
from app.utils.exceptions import NumericError, ParameterError

ArrayLike = Union[float, np.ndarray]


def _softplus(a: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, a)


def _check(epsilon: float, gamma: float, *arrays) -> None:
    if not gamma > 0:
        raise ParameterError("loss sharpness gamma must be positive", gamma=gamma)
    if epsilon < 0:
        raise ParameterError("epsilon must be non-negative", epsilon=epsilon)
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError("loss inputs contain non-finite values")


def _scalar_or_array(template, value):
    return float(value) if np.ndim(template) == 0 else value


def igll_loss(y: ArrayLike, f: ArrayLike, epsilon: float, gamma: float) -> ArrayLike:
    """ε 不敏感 γ-logistic 损失，逐元素"""
    y, f = np.asarray(y, dtype=np.float64), np.asarray(f, dtype=np.float64)
    _check(epsilon, gamma, y, f)
    r = f - y
    value = (_softplus(gamma * (r - epsilon)) + _softplus(gamma * (-r - epsilon))
             - 2.0 * _softplus(-gamma * epsilon)) / gamma
    return _scalar_or_array(r, value)


def igll_gradient(y: ArrayLike, f: ArrayLike, epsilon: float, gamma: float) -> ArrayLike:
    """∂l/∂f = σ(γ(f−y−ε)) − σ(γ(y−f−ε))，取值在 (−1, 1)"""
    y, f = np.asarray(y, dtype=np.float64), np.asarray(f, dtype=np.float64)
    _check(epsilon, gamma, y, f)
    r = f - y
    value = special.expit(gamma * (r - epsilon)) - special.expit(gamma * (-r - epsilon))
    return _scalar_or_array(r, value)


def epsilon_insensitive(y: ArrayLike, f: ArrayLike, epsilon: float) -> ArrayLike:
    """精确的 ε 不敏感损失 max(0, |f−y|−ε)"""
    r = np.asarray(f, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return _scalar_or_array(r, np.maximum(0.0, np.abs(r) - epsilon))


def loss_values(y: np.ndarray, f: np.ndarray, loss: LossSpec) -> np.ndarray:
    if loss.kind is LossKind.QUADRATIC:
        return 0.5 * (np.asarray(f) - np.asarray(y)) ** 2
    return np.asarray(igll_loss(y, f, loss.epsilon, loss.gamma))


def loss_derivative(y: np.ndarray, f: np.ndarray, loss: LossSpec) -> np.ndarray:
    if loss.kind is LossKind.QUADRATIC:
        return np.asarray(f, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return np.asarray(igll_gradient(y, f, loss.epsilon, loss.gamma))


def total_loss(y: np.ndarray, f: np.ndarray, loss: LossSpec) -> float:
    """Σ_i l(y_i, f_i)"""
    return float(np.sum(loss_values(y, f, loss)))


def curvature_bound(loss: LossSpec) -> float:
    """l 对 f 的二阶导上界：平方损失为 1，ε-IGLL 为 γ/2"""
    return 1.0 if loss.kind is LossKind.QUADRATIC else loss.gamma / 2.0
