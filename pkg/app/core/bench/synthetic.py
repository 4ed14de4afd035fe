"""
合成数据生成

输入在 [0,1]^m 上均匀分布，目标来自已知的模型加高斯噪声（标准差 0.1），
单核问题的真实 σ 和多核问题的稀疏分组都可以被恢复。
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from app.core.feature_map import embed, sample_base
from app.core.mkl.grouped import GroupedFeatures, build_grouped_features
from app.core.skl.objective import SklProblem
from app.models.kernel_spec import KernelFamily, KernelSpec
from app.utils.exceptions import ParameterError

NOISE_STD = 0.1
# 生成目标函数的随机特征与训练用的随机样本互不重叠
PLANT_SEED_OFFSET = 10_007
PLANT_FEATURES = 256


@dataclass(frozen=True)
class PlantedSkl:
    problem: SklProblem
    sigma_true: np.ndarray


@dataclass(frozen=True)
class PlantedMkl:
    X: np.ndarray
    y: np.ndarray
    features: GroupedFeatures
    w_true: np.ndarray
    active: List[int]


def make_planted_skl_problem(n_train: int, n_valid: int, m: int = 2, sigma_true: float = 2.0,
                             seed: int = 0, family: KernelFamily = KernelFamily.GAUSSIAN,
                             rho: float = 1e-3, lam: float = 1.0, noise_std: float = NOISE_STD) -> PlantedSkl:
    """
    目标函数取自核为 (family, σ_true) 的高斯过程的随机特征近似样本

    Returns:
        PlantedSkl(SklProblem, σ_true 向量)
    """
    if n_train < 1 or n_valid < 1:
        raise ParameterError("planted problem needs at least one training and one validation example",
                             n_train=n_train, n_valid=n_valid)
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n_train, m))
    U = rng.uniform(0.0, 1.0, size=(n_valid, m))

    sigma = np.full(m, float(sigma_true))
    spec = KernelSpec(family=family, sigma=tuple(sigma.tolist()))
    plant_base = sample_base(m, PLANT_FEATURES, seed + PLANT_SEED_OFFSET)
    a = rng.standard_normal(PLANT_FEATURES)
    y = embed(X, spec, plant_base).values @ a + noise_std * rng.standard_normal(n_train)
    v = embed(U, spec, plant_base).values @ a + noise_std * rng.standard_normal(n_valid)

    problem = SklProblem(X=X, y=y, U=U, v=v, rho=rho, lam=lam, family=family, c=spec.c)
    return PlantedSkl(problem=problem, sigma_true=sigma)


def default_bench_specs(r: int, m: int) -> List[KernelSpec]:
    """r 个不同带宽的高斯核，σ = 0.5·2^t"""
    return [KernelSpec(family=KernelFamily.GAUSSIAN, sigma=(0.5 * 2.0 ** t,) * m) for t in range(r)]


def make_planted_mkl_problem(n: int, m: int = 4, r: int = 3, d_per_kernel: int = 50, seed: int = 0,
                             specs: Optional[Sequence[KernelSpec]] = None, active: Optional[Sequence[int]] = None,
                             noise_std: float = NOISE_STD) -> PlantedMkl:
    """
    目标是少数几个核分组的线性组合加噪声

    每个活跃分组的权重归一化到 ||w_t||₂ = √d_t，使各分组贡献的方差约为 1。
    默认只有第一个分组活跃。
    """
    if n < 1:
        raise ParameterError("planted problem needs at least one example", n=n)
    specs = list(specs) if specs is not None else default_bench_specs(r, m)
    active = sorted(set(active)) if active is not None else [0]
    if not all(0 <= t < len(specs) for t in active):
        raise ParameterError("active kernel index out of range", active=list(active), r=len(specs))

    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, m))
    gf = build_grouped_features(X, specs, d_per_kernel, seed)

    w_true = np.zeros(gf.n_columns)
    for t in active:
        start, stop = gf.groups[t]
        g = rng.standard_normal(stop - start)
        w_true[start:stop] = g * np.sqrt(stop - start) / np.linalg.norm(g)
    y = gf.F @ w_true + noise_std * rng.standard_normal(n)
    return PlantedMkl(X=X, y=y, features=gf, w_true=w_true, active=list(active))
