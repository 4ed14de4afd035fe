"""
三类核的频率分位数函数 h(u)

σ 不在这里乘，统一在 materialize_frequencies 里按列缩放。
"""

from typing import Union

import numpy as np
from scipy import special

from app.models.kernel_spec import KernelFamily
from app.utils.exceptions import DomainError

ArrayLike = Union[float, np.ndarray]


def _gaussian(u: np.ndarray) -> np.ndarray:
    # ndtri(u) == √2·erfinv(2u−1)，尾部精度更好
    return special.ndtri(u)


def _skewed_chi2(u: np.ndarray) -> np.ndarray:
    return (2.0 / np.pi) * np.log(np.tan(np.pi * u / 2.0))


def _skewed_intersection(u: np.ndarray) -> np.ndarray:
    return np.tan(np.pi * (u - 0.5))


_QUANTILES = {
    KernelFamily.GAUSSIAN: _gaussian,
    KernelFamily.SKEWED_CHI2: _skewed_chi2,
    KernelFamily.SKEWED_INTERSECTION: _skewed_intersection,
}


def quantile(family: Union[KernelFamily, str], u: ArrayLike) -> ArrayLike:
    """
    核族频率密度的分位数函数

    Args:
        family: 核族
        u: (0,1) 内的均匀随机数，标量或数组

    Returns:
        与 u 同形状的频率值

    Raises:
        DomainError: u 落在 0、1 或区间之外
    """
    family = KernelFamily(family)
    values = np.asarray(u, dtype=np.float64)
    if not np.all((values > 0.0) & (values < 1.0)):
        bad = values[~((values > 0.0) & (values < 1.0))]
        raise DomainError("quantile argument must lie strictly inside (0, 1)",
                          family=family.value, offending=float(bad.ravel()[0]))

    result = _QUANTILES[family](values)
    if np.ndim(u) == 0:
        return float(result)
    return result
