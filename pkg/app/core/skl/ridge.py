"""
随机特征上的岭回归闭式解 β = (ΦᵀΦ + λI)⁻¹Φᵀy

只用 Cholesky 分解求解，不显式求逆；内存 O(Nd + d²)。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from scipy import linalg

from app.core.feature_map import BaseSample, FeatureMatrix, embed
from app.models.kernel_spec import KernelSpec
from app.utils.exceptions import ArtifactError, DimensionError, NumericError, ParameterError
from app.utils.file_utils import load_json, save_json
from app.utils.logger import get_logger

logger = get_logger(__name__)

# 条件数估计超过该值时加抖动
CONDITION_LIMIT = 1e12
JITTER_SCALE = 1e-8
ARTIFACT_KIND = "ridge_model"

Factor = Tuple[np.ndarray, bool]


def factorize_gram(Q: np.ndarray) -> Tuple[Factor, float]:
    """
    对称正定分解 Q = LLᵀ，病态时加 1e-8·trace(Q)/d 的抖动

    Returns:
        (cho_factor 结果, 实际加上的抖动)
    """
    d = Q.shape[0]
    jitter = 0.0
    try:
        factor = linalg.cho_factor(Q, lower=True, check_finite=False)
        diag = np.abs(np.diag(factor[0]))
        condition = (diag.max() / diag.min()) ** 2 if diag.min() > 0 else np.inf
    except linalg.LinAlgError:
        condition = np.inf

    if condition > CONDITION_LIMIT:
        jitter = JITTER_SCALE * np.trace(Q) / d
        logger.warning(f"岭回归系统病态，加抖动 | 条件数估计: {condition:.3e} | 抖动: {jitter:.3e}")
        try:
            factor = linalg.cho_factor(Q + jitter * np.eye(d), lower=True, check_finite=False)
        except linalg.LinAlgError as e:
            raise NumericError(f"ridge system is not positive definite: {e}")
    return factor, jitter


def _values(Phi: Union[FeatureMatrix, np.ndarray]) -> np.ndarray:
    return Phi.values if isinstance(Phi, FeatureMatrix) else np.asarray(Phi, dtype=np.float64)


def solve_ridge(Phi: Union[FeatureMatrix, np.ndarray], y: np.ndarray, lam: float) -> np.ndarray:
    """
    岭回归正规方程求解

    Args:
        Phi: N×d 特征矩阵
        y: 长度 N 的目标
        lam: 正则系数 λ > 0

    Raises:
        ParameterError: λ ≤ 0
        DimensionError: 行数和 y 的长度不一致
        NumericError: 输入含 NaN/Inf
    """
    beta, _ = _solve(Phi, y, lam)
    return beta


def _solve(Phi, y, lam) -> Tuple[np.ndarray, Factor]:
    if not lam > 0:
        raise ParameterError("ridge lambda must be positive", lam=lam)
    F = _values(Phi)
    y = np.asarray(y, dtype=np.float64).ravel()
    if F.ndim != 2 or F.shape[0] != y.shape[0]:
        raise DimensionError("feature rows must equal the number of targets", phi_shape=F.shape, y_length=y.shape[0])
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(y))):
        raise NumericError("ridge inputs contain non-finite values")

    Q = F.T @ F
    Q[np.diag_indices_from(Q)] += lam
    factor, _ = factorize_gram(Q)
    return linalg.cho_solve(factor, F.T @ y, check_finite=False), factor


@dataclass(frozen=True)
class RidgeModel:
    """岭回归模型：权重 β、正则 λ 和生成特征的核描述"""
    beta: np.ndarray
    lam: float
    spec: KernelSpec
    d: int
    seed: int

    def predict(self, X: np.ndarray, base: BaseSample) -> np.ndarray:
        if base.d != self.d or base.seed != self.seed:
            raise ArtifactError("base sample does not match the model",
                                model_d=self.d, model_seed=self.seed, base_d=base.d, base_seed=base.seed)
        return embed(X, self.spec, base).values @ self.beta

    def to_dict(self) -> dict:
        return {
            "kind": ARTIFACT_KIND,
            "family": self.spec.family.value,
            "sigma": list(self.spec.sigma),
            "c": self.spec.c,
            "lambda": self.lam,
            "d": self.d,
            "seed": self.seed,
            "beta": self.beta.tolist(),
        }

    def save(self, path: Union[str, Path]) -> Path:
        return save_json(self.to_dict(), path)

    @classmethod
    def from_dict(cls, data: dict) -> "RidgeModel":
        try:
            spec = KernelSpec(family=data["family"], sigma=tuple(data["sigma"]), c=data["c"])
            beta = np.asarray(data["beta"], dtype=np.float64)
            model = cls(beta=beta, lam=float(data["lambda"]), spec=spec, d=int(data["d"]), seed=int(data["seed"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ArtifactError(f"corrupted ridge model artifact: {e}")
        if model.beta.shape != (model.d,):
            raise ArtifactError("beta length does not match d", beta_length=model.beta.size, d=model.d)
        return model

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RidgeModel":
        return cls.from_dict(load_json(path, kind=ARTIFACT_KIND))
