"""
数据集读写

稀疏文本格式：每行一个样本，"target idx:val idx:val …"，下标从 1 开始，空白分隔。
可选的首部注释 "# groups: 0-3,4-7" 标注描述子分块（0 起始、两端闭合的列区间）。
稠密 CSV 为次要输入格式：每行 "target,x1,…,xm"，允许一行表头。
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from app.utils.exceptions import DatasetNotFoundError, DimensionError, NumericError, ParameterError, ParseError
from app.utils.logger import get_logger

logger = get_logger(__name__)

GROUPS_PREFIX = "# groups:"
ColumnRange = Tuple[int, int]


@dataclass(frozen=True)
class Dataset:
    """
    Attributes:
        X: N×m 稠密输入
        y: 长度 N 的目标
        groups: 可选的描述子列分块，必须划分全部列
    """
    X: np.ndarray
    y: np.ndarray
    groups: Optional[List[ColumnRange]] = field(default=None)

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.size:
            raise DimensionError("dataset inputs must be N×m with N targets", x_shape=self.X.shape, y_shape=self.y.shape)
        if self.y.size < 1:
            raise ParseError("dataset must contain at least one example")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise NumericError("dataset contains non-finite values")
        if self.groups is not None:
            _check_partition(self.groups, self.X.shape[1])
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(X=self.X[rows].copy(), y=self.y[rows].copy(), groups=self.groups)


def _check_partition(groups: List[ColumnRange], m: int) -> None:
    expected = 0
    for start, stop in sorted(groups):
        if start != expected or stop <= start:
            raise ParseError("feature groups must partition the columns", groups=groups, m=m)
        expected = stop
    if expected != m:
        raise ParseError("feature groups must cover every column", groups=groups, m=m)


def _parse_groups(text: str, line_no: int) -> List[ColumnRange]:
    groups = []
    for part in text.split(","):
        try:
            first, last = part.strip().split("-")
            groups.append((int(first), int(last) + 1))
        except ValueError:
            raise ParseError(f"malformed group range {part.strip()!r}", line=line_no)
    return groups


def parse_dataset(path: Union[str, Path], m: Optional[int] = None) -> Dataset:
    """
    解析稀疏文本数据集，未出现的下标补零

    Args:
        path: 文件路径
        m: 输入维度，默认取文件里最大的下标

    Raises:
        DatasetNotFoundError: 文件不存在
        ParseError: 格式错误（带行号）、下标 ≤ 0、文件里没有样本
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFoundError(path)

    targets: List[float] = []
    rows: List[Tuple[np.ndarray, np.ndarray]] = []
    groups = None
    max_index = 0
    with path.open("r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith(GROUPS_PREFIX):
                    groups = _parse_groups(line[len(GROUPS_PREFIX):], line_no)
                continue

            tokens = line.split()
            try:
                targets.append(float(tokens[0]))
            except ValueError:
                raise ParseError(f"target is not a number: {tokens[0]!r}", line=line_no)

            indices, values = [], []
            for token in tokens[1:]:
                idx, sep, val = token.partition(":")
                if not sep:
                    raise ParseError(f"expected idx:val, got {token!r}", line=line_no)
                try:
                    index, value = int(idx), float(val)
                except ValueError:
                    raise ParseError(f"malformed entry {token!r}", line=line_no)
                if index <= 0:
                    raise ParseError(f"feature index must be >= 1, got {index}", line=line_no)
                indices.append(index - 1)
                values.append(value)
            if len(set(indices)) != len(indices):
                raise ParseError("duplicate feature index", line=line_no)
            max_index = max(max_index, max(indices, default=-1) + 1)
            rows.append((np.asarray(indices, dtype=np.int64), np.asarray(values, dtype=np.float64)))

    if not rows:
        raise ParseError("dataset file contains no examples", path=str(path))
    if m is None:
        m = max_index
    elif m < max_index:
        raise ParseError(f"feature index {max_index} exceeds configured input dimension {m}", path=str(path))
    if m < 1:
        raise ParseError("dataset has no feature columns", path=str(path))

    X = np.zeros((len(rows), m))
    for i, (indices, values) in enumerate(rows):
        X[i, indices] = values
    logger.info(f"数据集解析完成 | 路径: {path} | 样本数: {len(rows)} | 维度: {m}")
    return Dataset(X=X, y=np.asarray(targets), groups=groups)


def parse_dense_csv(path: Union[str, Path]) -> Dataset:
    """稠密 CSV：第一列为目标"""
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFoundError(path)

    records: List[List[float]] = []
    with path.open("r", encoding="utf-8", newline="") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                records.append([float(cell) for cell in row])
            except ValueError:
                if line_no == 1 and not records:
                    continue  # 表头
                raise ParseError("non-numeric CSV cell", line=line_no)
            if len(records[-1]) != len(records[0]):
                raise ParseError("inconsistent CSV column count", line=line_no)

    if not records:
        raise ParseError("dataset file contains no examples", path=str(path))
    data = np.asarray(records)
    if data.shape[1] < 2:
        raise ParseError("CSV rows need a target and at least one feature", path=str(path))
    return Dataset(X=data[:, 1:], y=data[:, 0])


def load_dataset(path: Union[str, Path], m: Optional[int] = None) -> Dataset:
    """按后缀选择解析器"""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return parse_dense_csv(path)
    return parse_dataset(path, m=m)


def write_dataset(ds: Dataset, path: Union[str, Path]) -> Path:
    """写成稀疏文本格式，数值保留 17 位有效数字，零值省略"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        if ds.groups:
            f.write(GROUPS_PREFIX + " " + ",".join(f"{a}-{b - 1}" for a, b in ds.groups) + "\n")
        for target, row in zip(ds.y, ds.X):
            entries = " ".join(f"{j + 1}:{format(v, '.17g')}" for j, v in enumerate(row) if v != 0.0)
            f.write(f"{format(target, '.17g')} {entries}".rstrip() + "\n")
    return path


def split_train_validation(ds: Dataset, fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    按种子打乱后切分训练/验证集

    Args:
        fraction: 验证集比例，0 < fraction < 1
        seed: 随机种子，相同种子得到相同切分

    Returns:
        (训练集, 验证集)，两者不相交且覆盖全部样本
    """
    if not 0.0 < fraction < 1.0:
        raise ParameterError("validation fraction must lie in (0, 1)", fraction=fraction)
    if ds.n < 2:
        raise ParameterError("need at least two examples to split", n=ds.n)
    order = np.random.default_rng(seed).permutation(ds.n)
    n_valid = min(max(int(round(fraction * ds.n)), 1), ds.n - 1)
    return ds.subset(np.sort(order[n_valid:])), ds.subset(np.sort(order[:n_valid]))
