from enum import Enum
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.config import DEFAULT_LOSS_EPSILON, DEFAULT_LOSS_GAMMA, DEFAULT_SKEW_OFFSET


class KernelFamily(str, Enum):
    """可以通过分位数重参数化优化的三类平移不变核"""
    GAUSSIAN = "gaussian"
    SKEWED_CHI2 = "skewed_chi2"
    SKEWED_INTERSECTION = "skewed_intersection"

    @property
    def is_skewed(self) -> bool:
        return self is not KernelFamily.GAUSSIAN


class KernelSpec(BaseModel):
    """
    核族 + 每维频率尺度 σ + 偏斜偏移 c

    σ 越大，采样频率越分散，对应的核越窄。c 只在 skewed 族里使用。
    """
    model_config = ConfigDict(frozen=True)

    family: KernelFamily
    sigma: Tuple[float, ...]
    c: float = Field(default=DEFAULT_SKEW_OFFSET, ge=0.0)

    @field_validator("sigma")
    @classmethod
    def _sigma_positive(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) == 0:
            raise ValueError("sigma must have at least one entry")
        if not all(np.isfinite(s) and s > 0 for s in v):
            raise ValueError("sigma must be strictly positive and finite")
        return tuple(float(s) for s in v)

    @property
    def m(self) -> int:
        return len(self.sigma)

    @property
    def sigma_array(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=np.float64)

    def with_sigma(self, sigma) -> "KernelSpec":
        """同一族、同一 c，换一组 σ"""
        return KernelSpec(family=self.family, sigma=tuple(np.asarray(sigma, dtype=np.float64).tolist()), c=self.c)


class KernelConfig(BaseModel):
    """配置文件里的核描述，σ 可以写成标量，在知道输入维度后再展开"""
    family: KernelFamily = KernelFamily.GAUSSIAN
    sigma_init: Union[float, List[float]] = 1.0
    c: float = Field(default=DEFAULT_SKEW_OFFSET, ge=0.0)
    # 该核作用的输入列范围 [start, stop)，为空表示全部列
    columns: Union[Tuple[int, int], None] = None

    @field_validator("sigma_init")
    @classmethod
    def _sigma_init_positive(cls, v):
        values = v if isinstance(v, list) else [v]
        if not values or not all(s > 0 for s in values):
            raise ValueError("sigma_init must be strictly positive")
        return v

    def to_spec(self, m: int) -> KernelSpec:
        if isinstance(self.sigma_init, list):
            if len(self.sigma_init) != m:
                raise ValueError(f"sigma_init has {len(self.sigma_init)} entries but input dimension is {m}")
            sigma = tuple(self.sigma_init)
        else:
            sigma = (float(self.sigma_init),) * m
        return KernelSpec(family=self.family, sigma=sigma, c=self.c)


class LossKind(str, Enum):
    QUADRATIC = "quadratic"
    EPSILON_IGLL = "epsilon_igll"


class LossSpec(BaseModel):
    """分组 Lasso 的损失函数：平方损失或 ε 不敏感 γ-logistic 损失"""
    model_config = ConfigDict(frozen=True)

    kind: LossKind = LossKind.EPSILON_IGLL
    epsilon: float = Field(default=DEFAULT_LOSS_EPSILON, ge=0.0)
    gamma: float = Field(default=DEFAULT_LOSS_GAMMA, gt=0.0)
