"""
基础随机样本：只采样一次，超参数变化时复用
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Union

import numpy as np

from app.config import BASE_SAMPLE_JSON_LIMIT
from app.core.feature_map.quantiles import quantile
from app.models.kernel_spec import KernelFamily
from app.utils.exceptions import ArtifactError, DimensionError, DomainError, ParameterError
from app.utils.logger import get_logger

logger = get_logger(__name__)

# 均匀样本离 0/1 的最小距离，分位数在端点发散
OMEGA_EPS = 1e-12
ARTIFACT_KIND = "base_sample"


@dataclass(frozen=True, eq=False)
class BaseSample:
    """
    冻结的均匀随机数

    Attributes:
        omega: d×m，每个元素严格落在 (0,1)
        phase: 长度 d，落在 [0,1)，在余弦里乘以 2π
        seed: 生成用的随机种子
    """
    omega: np.ndarray
    phase: np.ndarray
    seed: int
    _unit_frequencies: Mapping[KernelFamily, np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.omega.ndim != 2 or self.phase.ndim != 1 or self.omega.shape[0] != self.phase.shape[0]:
            raise DimensionError("omega must be d×m and phase length d",
                                 omega_shape=self.omega.shape, phase_shape=self.phase.shape)
        self.omega.setflags(write=False)
        self.phase.setflags(write=False)
        # 各核族的 h(ω) 在构造时算好，之后只读，可被嵌入线程并发使用
        unit = {}
        for family in KernelFamily:
            values = quantile(family, self.omega)
            values.setflags(write=False)
            unit[family] = values
        object.__setattr__(self, "_unit_frequencies", MappingProxyType(unit))

    @property
    def d(self) -> int:
        return self.omega.shape[0]

    @property
    def m(self) -> int:
        return self.omega.shape[1]

    def unit_frequencies(self, family: KernelFamily) -> np.ndarray:
        """h(ω)，只读"""
        return self._unit_frequencies[KernelFamily(family)]

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(f"{self.seed}|{self.d}|{self.m}|".encode())
        digest.update(np.ascontiguousarray(self.omega).tobytes())
        digest.update(np.ascontiguousarray(self.phase).tobytes())
        return digest.hexdigest()

    def save(self, path: Union[str, Path]) -> Path:
        """
        保存为 JSON；元素太多时原始数据写到同名 .npz，JSON 只记录元信息

        浮点数用 repr 写出，重新加载后逐位一致。
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        record = {
            "kind": ARTIFACT_KIND,
            "seed": self.seed,
            "d": self.d,
            "m": self.m,
            "fingerprint": self.fingerprint,
        }
        if self.omega.size > BASE_SAMPLE_JSON_LIMIT:
            payload = path.with_suffix(".npz")
            np.savez(payload, omega=self.omega, phase=self.phase)
            record["payload"] = payload.name
        else:
            record["omega"] = self.omega.tolist()
            record["phase"] = self.phase.tolist()

        path.write_text(json.dumps(record), encoding="utf-8")
        logger.info(f"随机样本已保存 | 路径: {path} | d: {self.d} | m: {self.m} | seed: {self.seed}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BaseSample":
        path = Path(path)
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ArtifactError(f"cannot read base sample artifact: {e}", path=str(path))
        if record.get("kind") != ARTIFACT_KIND:
            raise ArtifactError("not a base sample artifact", path=str(path))

        try:
            if "payload" in record:
                with np.load(path.parent / record["payload"]) as data:
                    omega, phase = np.array(data["omega"]), np.array(data["phase"])
            else:
                omega = np.asarray(record["omega"], dtype=np.float64).reshape(record["d"], record["m"])
                phase = np.asarray(record["phase"], dtype=np.float64)
            sample = cls(omega=omega, phase=phase, seed=int(record["seed"]))
        except (KeyError, ValueError, OSError, DomainError) as e:
            raise ArtifactError(f"corrupted base sample artifact: {e}", path=str(path))

        if sample.fingerprint != record.get("fingerprint"):
            raise ArtifactError("base sample fingerprint mismatch", path=str(path))
        return sample


def sample_base(m: int, d: int, seed: int) -> BaseSample:
    """
    生成 d 组 m 维均匀频率样本和 d 个相位

    Args:
        m: 输入维度
        d: 随机特征数
        seed: 随机种子，相同 (m, d, seed) 逐位复现

    Raises:
        DimensionError: m 或 d 小于 1
    """
    if int(m) != m or int(d) != d or m < 1 or d < 1:
        raise DimensionError("input dimension and feature count must be positive integers", m=m, d=d)
    if int(seed) != seed or seed < 0:
        raise ParameterError("seed must be a non-negative integer", seed=seed)

    rng = np.random.default_rng(int(seed))
    omega = np.clip(rng.random((int(d), int(m))), OMEGA_EPS, 1.0 - OMEGA_EPS)
    phase = rng.random(int(d))
    return BaseSample(omega=omega, phase=phase, seed=int(seed))
