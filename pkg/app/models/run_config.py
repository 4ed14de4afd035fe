import json
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.config import (
    DEFAULT_FEATURES,
    DEFAULT_RIDGE_LAMBDA,
    DEFAULT_SEED,
    DEFAULT_SIGMA_RHO,
    OUTPUT_DIR,
)
from app.models.kernel_spec import KernelConfig, LossSpec
from app.utils.exceptions import ConfigError


class OptimizerMethod(str, Enum):
    GD = "gd"
    LBFGS = "lbfgs"


class OptimizerOptions(BaseModel):
    """单核超参数学习（log σ 上的下降）"""
    method: OptimizerMethod = OptimizerMethod.GD
    max_iter: int = Field(default=200, ge=0)
    rel_tol: float = Field(default=1e-6, gt=0.0)
    grad_tol: float = Field(default=1e-8, ge=0.0)
    armijo: float = Field(default=1e-4, gt=0.0, lt=1.0)
    shrink: float = Field(default=0.5, gt=0.0, lt=1.0)
    max_backtracks: int = Field(default=50, ge=1)
    initial_step: float = Field(default=1.0, gt=0.0)


class ProxOptions(BaseModel):
    """加速近端梯度（分组 Lasso）"""
    max_iter: int = Field(default=5000, ge=1)
    rel_tol: float = Field(default=1e-8, gt=0.0)
    kkt_tol: float = Field(default=1e-5, gt=0.0)
    initial_step: float = Field(default=1.0, gt=0.0)
    shrink: float = Field(default=0.5, gt=0.0, lt=1.0)
    max_backtracks: int = Field(default=60, ge=1)


class GmklMode(str, Enum):
    PRIMAL = "primal"
    GRAM = "gram"


class GmklOptions(BaseModel):
    """GMKL 交替最小化参考解"""
    mode: GmklMode = GmklMode.PRIMAL
    max_outer: int = Field(default=2000, ge=1)
    rel_tol: float = Field(default=1e-10, gt=0.0)
    inner_max_iter: int = Field(default=500, ge=1)
    inner_grad_tol: float = Field(default=1e-9, gt=0.0)
    freeze_below: float = Field(default=1e-12, ge=0.0)
    max_n: int = Field(default=2000, ge=1)


class BenchOptions(BaseModel):
    """规模扩展基准"""
    n_grid: List[int] = Field(default_factory=lambda: [1000, 3000, 10000, 30000])
    exact_n_grid: List[int] = Field(default_factory=lambda: [200, 400, 800])
    d: int = Field(default=500, ge=1)
    r: int = Field(default=3, ge=1)
    m: int = Field(default=4, ge=1)
    # 固定迭代次数，计时只反映每次迭代的代价
    skl_max_iter: int = Field(default=5, ge=0)
    gl_max_iter: int = Field(default=50, ge=1)
    gmkl_max_outer: int = Field(default=10, ge=1)
    repeats: int = Field(default=1, ge=1)
    include_exact: bool = True

    @field_validator("n_grid", "exact_n_grid")
    @classmethod
    def _positive_sizes(cls, v: List[int]) -> List[int]:
        if not all(n >= 2 for n in v):
            raise ValueError("every N in the grid must be at least 2")
        return v


class VerifyOptions(BaseModel):
    """不变量校验套件；tolerance_scale 放大/缩小所有容差，0 表示严格相等"""
    tolerance_scale: float = Field(default=1.0, ge=0.0)
    mc_pairs: int = Field(default=100, ge=1)
    mc_seeds: int = Field(default=20, ge=1)
    mc_small_d: int = Field(default=500, ge=1)
    mc_abs_d: int = Field(default=4000, ge=1)
    mc_large_d: int = Field(default=8000, ge=1)
    gradient_draws: int = Field(default=10, ge=1)
    equivalence_n: int = Field(default=200, ge=2)
    equivalence_r: int = Field(default=3, ge=1)
    equivalence_d: int = Field(default=20, ge=1)
    equivalence_c: float = Field(default=1.0, gt=0.0)
    artifact_path: Optional[Path] = None


class RunConfig(BaseModel):
    """
    一次 CLI/API 运行的完整配置

    kernels 只有一个元素时用于单核学习，多个元素时每个对应分组 Lasso 的一个分组。
    mkl_lambda 为空时用 lambda_fraction·λ_max。
    """
    model_config = ConfigDict(populate_by_name=True)

    dataset_path: Optional[Path] = None
    validation_path: Optional[Path] = None
    validation_fraction: float = Field(default=0.3, gt=0.0, lt=1.0)
    input_dim: Optional[int] = Field(default=None, ge=1)

    kernels: List[KernelConfig] = Field(default_factory=lambda: [KernelConfig()])
    d: int = Field(default=DEFAULT_FEATURES, ge=1)
    ridge_lambda: float = Field(default=DEFAULT_RIDGE_LAMBDA, gt=0.0, alias="lambda")
    rho: float = Field(default=DEFAULT_SIGMA_RHO, ge=0.0)

    loss: LossSpec = Field(default_factory=LossSpec)
    mkl_lambda: Optional[float] = Field(default=None, gt=0.0)
    lambda_fraction: float = Field(default=0.1, gt=0.0, le=1.0)

    seed: int = Field(default=DEFAULT_SEED, ge=0)
    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)
    prox: ProxOptions = Field(default_factory=ProxOptions)
    gmkl: GmklOptions = Field(default_factory=GmklOptions)
    bench: BenchOptions = Field(default_factory=BenchOptions)
    verify: VerifyOptions = Field(default_factory=VerifyOptions)

    output_dir: Path = OUTPUT_DIR
    model_path: Optional[Path] = None
    base_sample_path: Optional[Path] = None

    @field_validator("kernels")
    @classmethod
    def _at_least_one_kernel(cls, v: List[KernelConfig]) -> List[KernelConfig]:
        if not v:
            raise ValueError("at least one kernel must be configured")
        return v

    @model_validator(mode="after")
    def _non_empty_column_ranges(self) -> "RunConfig":
        # 不同核可以作用在重叠的输入列上，分组互不相交的是特征列
        for kernel in self.kernels:
            if kernel.columns is None:
                continue
            start, stop = kernel.columns
            if start < 0 or stop <= start:
                raise ValueError(f"invalid kernel column range [{start}, {stop})")
        return self

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "RunConfig":
        """读取 JSON 配置，校验失败统一转成 ConfigError"""
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}", path=str(path))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}", path=str(path))
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            return cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError("invalid run configuration", errors=[err["msg"] for err in e.errors()])

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)
