"""
多核的分组随机特征：每个核一个分组，按列拼接
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.feature_map import BaseSample, embed, sample_base
from app.models.kernel_spec import KernelSpec
from app.utils.exceptions import DimensionError, ParameterError

ColumnRange = Tuple[int, int]


@dataclass(frozen=True)
class GroupedFeatures:
    """
    Attributes:
        F: N×Σd_t 拼接后的特征
        groups: 每个核在 F 中占据的连续列区间 [start, stop)
        specs: 每个分组的核描述
        bases: 每个分组独立的随机样本
        columns: 每个核读取的输入列区间，None 表示全部列
    """
    F: np.ndarray
    groups: List[ColumnRange]
    specs: List[KernelSpec]
    bases: List[BaseSample]
    columns: List[Optional[ColumnRange]]

    @property
    def r(self) -> int:
        return len(self.groups)

    @property
    def n_columns(self) -> int:
        return self.F.shape[1]

    def block(self, t: int) -> np.ndarray:
        start, stop = self.groups[t]
        return self.F[:, start:stop]

    def embed_inputs(self, X: np.ndarray) -> np.ndarray:
        """用相同的核和随机样本嵌入新的输入"""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        blocks = [embed(_select(X, cols), spec, base).values
                  for spec, base, cols in zip(self.specs, self.bases, self.columns)]
        return np.hstack(blocks)


def _select(X: np.ndarray, cols: Optional[ColumnRange]) -> np.ndarray:
    if cols is None:
        return X
    start, stop = cols
    if stop > X.shape[1]:
        raise DimensionError("kernel column range exceeds input columns", columns=cols, m=X.shape[1])
    return X[:, start:stop]


def build_grouped_features(X: np.ndarray, specs: Sequence[KernelSpec], d_per_kernel: Union[int, Sequence[int]],
                           seed: int, seeds: Optional[Sequence[int]] = None,
                           columns: Optional[Sequence[Optional[ColumnRange]]] = None) -> GroupedFeatures:
    """
    为每个核独立采样并嵌入，按 specs 顺序拼接

    Args:
        X: N×m 输入
        specs: r 个核描述
        d_per_kernel: 每个核的特征数，整数或长度 r 的列表
        seed: 第 t 个核默认用 seed + t
        seeds: 显式指定每个核的种子（调整核的顺序时随核一起调整）
        columns: 每个核读取的输入列区间（描述子分块），默认全部列
    """
    if not specs:
        raise ParameterError("at least one kernel spec is required")
    r = len(specs)
    d_list = [int(d_per_kernel)] * r if np.isscalar(d_per_kernel) else [int(d) for d in d_per_kernel]
    seed_list = [seed + t for t in range(r)] if seeds is None else [int(s) for s in seeds]
    col_list = [None] * r if columns is None else list(columns)
    if not (len(d_list) == len(seed_list) == len(col_list) == r):
        raise DimensionError("per-kernel feature counts, seeds and column ranges must have one entry per kernel",
                             r=r, d_count=len(d_list), seed_count=len(seed_list), column_count=len(col_list))

    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    blocks, groups, bases = [], [], []
    start = 0
    for spec, d_t, seed_t, cols in zip(specs, d_list, seed_list, col_list):
        base = sample_base(spec.m, d_t, seed_t)
        blocks.append(embed(_select(X, cols), spec, base).values)
        groups.append((start, start + d_t))
        bases.append(base)
        start += d_t

    return GroupedFeatures(F=np.hstack(blocks), groups=groups, specs=list(specs), bases=bases, columns=col_list)
