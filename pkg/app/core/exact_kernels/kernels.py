"""
三类核的闭式求值和 Gram 矩阵

只作为随机特征和等价性测试的真值使用，Gram 矩阵规模受 EXACT_KERNEL_MAX_N 限制。
所有核都是单位对角的归一化形式，多维情形按维度相乘。
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from app.config import EXACT_KERNEL_MAX_N
from app.models.kernel_spec import KernelFamily
from app.utils.exceptions import DimensionError, DomainError, KernelIndexError, ParameterError


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    family: KernelFamily
    sigma: np.ndarray
    c: float


def _as_sigma(sigma, m: int) -> np.ndarray:
    sigma = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    if sigma.shape != (m,):
        raise DimensionError("sigma length must equal the input dimension", sigma_length=sigma.size, m=m)
    if not np.all(sigma > 0):
        raise ParameterError("sigma must be strictly positive")
    return sigma


def _transform(A: np.ndarray, family: KernelFamily, c: float) -> np.ndarray:
    if not family.is_skewed:
        return A
    if np.any(A + c <= 0.0):
        raise DomainError("skewed kernels require x + c > 0", family=family.value, c=c)
    return np.log(A + c)


def _log_factor(family: KernelFamily, scaled: np.ndarray) -> np.ndarray:
    """单个维度上核值的对数，scaled = σ_i·Δ_i"""
    if family is KernelFamily.GAUSSIAN:
        return -0.5 * scaled ** 2
    a = np.abs(scaled)
    if family is KernelFamily.SKEWED_CHI2:
        # log sech(a) = −(a + log1p(e^{−2a}) − log 2)
        return -(a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0))
    return -a


def _dlog_factor(family: KernelFamily, sigma_i: float, delta_i: np.ndarray) -> np.ndarray:
    """∂/∂σ_i 的对数核值"""
    if family is KernelFamily.GAUSSIAN:
        return -sigma_i * delta_i ** 2
    if family is KernelFamily.SKEWED_CHI2:
        return -delta_i * np.tanh(sigma_i * delta_i)
    return -np.abs(delta_i)


def kernel_eval(family: Union[KernelFamily, str], sigma, c: float, x, y) -> float:
    """
    单点核值

    gaussian: Π exp(−σ_i²(x_i−y_i)²/2)
    skewed_chi2: Π sech(σ_i·(ln(x_i+c)−ln(y_i+c)))
    skewed_intersection: Π exp(−σ_i·|ln(x_i+c)−ln(y_i+c)|)
    """
    family = KernelFamily(family)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError("x and y must be vectors of equal length", x_shape=x.shape, y_shape=y.shape)
    sigma = _as_sigma(sigma, x.size)
    delta = _transform(x, family, c) - _transform(y, family, c)
    return float(np.exp(np.sum(_log_factor(family, sigma * delta))))


def _check_pair(X, Y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise DimensionError("column counts of X and Y must agree", x_cols=X.shape[1], y_cols=Y.shape[1])
    if max(X.shape[0], Y.shape[0]) > EXACT_KERNEL_MAX_N:
        raise DimensionError("exact Gram construction is limited to small inputs",
                             rows=max(X.shape[0], Y.shape[0]), limit=EXACT_KERNEL_MAX_N)
    return X, Y


def _log_gram(family: KernelFamily, sigma: np.ndarray, TX: np.ndarray, TY: np.ndarray) -> np.ndarray:
    # 按维度累加，只保留 N×N 的中间量
    log_k = np.zeros((TX.shape[0], TY.shape[0]))
    for i in range(TX.shape[1]):
        log_k += _log_factor(family, sigma[i] * (TX[:, i:i + 1] - TY[:, i][np.newaxis, :]))
    return log_k


def gram(family: Union[KernelFamily, str], sigma, c: float, X, Y=None) -> GramMatrix:
    """
    Gram 矩阵，(i,j) 元素 = kernel_eval(x_i, y_j)；Y 省略时取 X
    """
    family = KernelFamily(family)
    X, Y = _check_pair(X, X if Y is None else Y)
    sigma = _as_sigma(sigma, X.shape[1])
    values = np.exp(_log_gram(family, sigma, _transform(X, family, c), _transform(Y, family, c)))
    return GramMatrix(values=values, family=family, sigma=sigma, c=float(c))


def gram_derivative(family: Union[KernelFamily, str], sigma, c: float, X, Y, i: int) -> np.ndarray:
    """∂K/∂σ_i，精确核岭回归基线的梯度用"""
    family = KernelFamily(family)
    X, Y = _check_pair(X, Y)
    sigma = _as_sigma(sigma, X.shape[1])
    if int(i) != i or not 0 <= i < sigma.size:
        raise KernelIndexError("hyperparameter index out of range", index=i, m=sigma.size)

    TX, TY = _transform(X, family, c), _transform(Y, family, c)
    K = np.exp(_log_gram(family, sigma, TX, TY))
    delta_i = TX[:, i:i + 1] - TY[:, i][np.newaxis, :]
    return _dlog_factor(family, sigma[i], delta_i) * K


def skewed_chi2_ratio_form(sigma, c: float, x, y) -> float:
    """Π 2(x+c)^σ(y+c)^σ / ((x+c)^{2σ}+(y+c)^{2σ})，用来核对 sech 形式"""
    sigma = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    a = (np.asarray(x, dtype=np.float64) + c) ** sigma
    b = (np.asarray(y, dtype=np.float64) + c) ** sigma
    return float(np.prod(2.0 * a * b / (a ** 2 + b ** 2)))


def skewed_intersection_min_form(sigma, c: float, x, y) -> float:
    """Π min{(x+c)^σ/(y+c)^σ, (y+c)^σ/(x+c)^σ}，用来核对 exp(−σ|Δ|) 形式"""
    sigma = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    a = (np.asarray(x, dtype=np.float64) + c) ** sigma
    b = (np.asarray(y, dtype=np.float64) + c) ** sigma
    return float(np.prod(np.minimum(a / b, b / a)))
