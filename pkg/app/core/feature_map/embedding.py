"""
随机傅里叶特征嵌入及其对超参数的导数

φ_j(x) = √(2/d)·cos(t(x)ᵀγ_j + 2π·b_j)，γ_{j,i} = σ_i·h(ω_{j,i})
t 对高斯核是恒等变换，对 skewed 族是逐元素 ln(x+c)。
"""

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.config import EMBED_CHUNK_ROWS, MAX_THREADS
from app.core.feature_map.sampler import BaseSample
from app.models.kernel_spec import KernelSpec
from app.utils.exceptions import DimensionError, DomainError, KernelIndexError, NumericError


@dataclass(frozen=True)
class FrequencyMatrix:
    """gamma[j,i] = sigma[i]·h(omega[j,i])，形状 d×m"""
    gamma: np.ndarray


@dataclass(frozen=True)
class FeatureMatrix:
    """N×d 特征矩阵，spec_hash 绑定生成它的 KernelSpec 和 BaseSample"""
    values: np.ndarray
    spec_hash: str

    @property
    def shape(self):
        return self.values.shape


def spec_hash(spec: KernelSpec, base: BaseSample) -> str:
    digest = hashlib.sha256()
    digest.update(spec.family.value.encode())
    digest.update(repr(spec.sigma).encode())
    digest.update(repr(spec.c).encode())
    digest.update(base.fingerprint.encode())
    return digest.hexdigest()


def _check_spec_base(spec: KernelSpec, base: BaseSample) -> None:
    if spec.m != base.m:
        raise DimensionError("sigma length must equal the base sample input dimension",
                             sigma_length=spec.m, base_m=base.m)


def materialize_frequencies(spec: KernelSpec, base: BaseSample) -> FrequencyMatrix:
    """按 σ 缩放单位频率，不消耗任何随机数"""
    _check_spec_base(spec, base)
    gamma = base.unit_frequencies(spec.family) * spec.sigma_array[np.newaxis, :]
    return FrequencyMatrix(gamma=gamma)


def input_transform(X: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """
    输入变换 t(X)

    Raises:
        DimensionError: X 不是二维或列数不对
        DomainError: skewed 族里存在 x + c ≤ 0
        NumericError: X 含 NaN/Inf
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2 or X.shape[1] != spec.m:
        raise DimensionError("input columns must equal the kernel input dimension",
                             input_shape=X.shape, m=spec.m)
    if not np.all(np.isfinite(X)):
        raise NumericError("inputs contain non-finite values")
    if not spec.family.is_skewed:
        return X

    shifted = X + spec.c
    if np.any(shifted <= 0.0):
        raise DomainError("skewed kernels require x + c > 0 for every input entry",
                          family=spec.family.value, c=spec.c, min_input=float(X.min()))
    return np.log(shifted)


def _chunks(n_rows: int) -> List[slice]:
    step = max(1, EMBED_CHUNK_ROWS)
    return [slice(start, min(start + step, n_rows)) for start in range(0, max(n_rows, 1), step)]


def _map_chunks(fn, n_rows: int, n_jobs: int) -> List[np.ndarray]:
    # 串行和并行走同一套分块，保证结果逐位一致
    chunks = _chunks(n_rows)
    if n_jobs <= 1 or len(chunks) == 1:
        return [fn(s) for s in chunks]
    with ThreadPoolExecutor(max_workers=min(n_jobs, MAX_THREADS, len(chunks))) as pool:
        return list(pool.map(fn, chunks))


class Embedding:
    """
    缓存一次投影 t(X)Γᵀ + 2πb，供特征值和各个导数共用

    SKL 梯度需要同一个 X 上的 φ 和 m 个 ∂φ/∂σ_i，投影只算一次。
    内存只保留 N×d 的投影和 N×m 的 t(X)。
    """

    def __init__(self, X: np.ndarray, spec: KernelSpec, base: BaseSample, n_jobs: int = 1):
        _check_spec_base(spec, base)
        self.spec = spec
        self.base = base
        self.T = input_transform(X, spec)
        self.scale = np.sqrt(2.0 / base.d)
        self._gamma = materialize_frequencies(spec, base).gamma
        self._offset = 2.0 * np.pi * base.phase
        self._n_jobs = n_jobs
        self._projection = np.vstack(_map_chunks(self._project, self.T.shape[0], n_jobs)) \
            if self.T.shape[0] else np.empty((0, base.d))
        self._sin: Optional[np.ndarray] = None

    def _project(self, rows: slice) -> np.ndarray:
        return self.T[rows] @ self._gamma.T + self._offset

    @property
    def n_rows(self) -> int:
        return self.T.shape[0]

    def features(self) -> FeatureMatrix:
        return FeatureMatrix(values=self.scale * np.cos(self._projection),
                             spec_hash=spec_hash(self.spec, self.base))

    def derivative(self, i: int) -> np.ndarray:
        """∂φ/∂σ_i，形状 N×d"""
        if int(i) != i or not 0 <= i < self.spec.m:
            raise KernelIndexError("hyperparameter index out of range", index=i, m=self.spec.m)
        if self._sin is None:
            self._sin = np.sin(self._projection)
        h_i = self.base.unit_frequencies(self.spec.family)[:, i]
        return -self.scale * self.T[:, i:i + 1] * h_i[np.newaxis, :] * self._sin


def embed(X: np.ndarray, spec: KernelSpec, base: BaseSample, n_jobs: int = 1) -> FeatureMatrix:
    """
    计算随机傅里叶特征

    Args:
        X: N×m 输入
        spec: 核描述
        base: 冻结的随机样本
        n_jobs: 按行分块的线程数，结果与串行逐位一致

    Returns:
        FeatureMatrix，所有元素落在 ±√(2/d) 内
    """
    return Embedding(X, spec, base, n_jobs=n_jobs).features()


def embed_derivative(U: np.ndarray, spec: KernelSpec, base: BaseSample, i: int) -> np.ndarray:
    """
    特征矩阵对 σ_i 的导数

    (k,j) 元素 = −√(2/d)·t(u_k)_i·h(ω_{j,i})·sin(t(u_k)ᵀγ_j + 2π·b_j)
    """
    if int(i) != i or not 0 <= i < spec.m:
        raise KernelIndexError("hyperparameter index out of range", index=i, m=spec.m)
    return Embedding(U, spec, base).derivative(i)
