"""
不变量校验套件

每个性质给出 PASS/FAIL、观测值和阈值。tolerance_scale 统一缩放数值容差，
设为 0 时所有带容差的性质都要求精确成立，用来确认校验本身会报告失败。
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Union

import numpy as np

from app.core.bench.synthetic import make_planted_mkl_problem
from app.core.exact_kernels import kernel_eval
from app.core.feature_map import embed, sample_base
from app.core.mkl import (
    GroupedLinearModel,
    epsilon_insensitive,
    gmkl_lambda,
    gmkl_reference,
    igll_loss,
    kernel_weights,
    lambda_max,
    train_group_lasso,
    weight_bound_gap,
)
from app.core.skl import RidgeModel, SklProblem, objective_and_gradient, validation_objective
from app.models.kernel_spec import KernelFamily, KernelSpec, LossKind, LossSpec
from app.models.run_config import GmklOptions, ProxOptions, VerifyOptions
from app.utils.exceptions import ArtifactError
from app.utils.file_utils import load_json, save_json
from app.utils.logger import get_logger

logger = get_logger(__name__)

MC_INPUT_DIM = 4
MC_ABS_TOL = 0.08
MC_RATIO_RANGE = (2.0, 8.0)
GRADIENT_REL_TOL = 1e-4
FD_RELATIVE_STEP = 1e-5
LOSS_GAMMAS = (1.0, 5.0, 10.0)
LOSS_EPSILON = 0.1
WEIGHT_BOUND_DRAWS = 10_000
WEIGHT_BOUND_TOL = 1e-10
EQUIVALENCE_TOL = 1e-3
KKT_TOL = 1e-5


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def __post_init__(self):
        # 比较结果常是 numpy 标量，统一成 Python 内置类型以便写 JSON
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "threshold", float(self.threshold))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value:.6g} threshold={self.threshold:.6g} {self.detail}".rstrip()


@dataclass
class VerifyReport:
    results: List[PropertyResult] = field(default_factory=list)
    tolerance_scale: float = 1.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[str]:
        return [r.name for r in self.results if not r.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tolerance_scale": self.tolerance_scale,
            "failures": self.failures,
            "results": [asdict(r) for r in self.results],
        }

    def write_json(self, path: Union[str, Path]) -> Path:
        return save_json(self.to_dict(), path)


def central_difference(fun: Callable[[np.ndarray], float], x: np.ndarray, relative_step: float = FD_RELATIVE_STEP) -> np.ndarray:
    """中心差分梯度，第 i 维步长 relative_step·|x_i|"""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        h = relative_step * max(abs(x[i]), 1.0e-8)
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return grad


def _max_pair_error(X: np.ndarray, Y: np.ndarray, exact: np.ndarray, spec: KernelSpec, d: int, seed: int) -> float:
    base = sample_base(X.shape[1], d, seed)
    approx = np.sum(embed(X, spec, base).values * embed(Y, spec, base).values, axis=1)
    return float(np.max(np.abs(approx - exact)))


def check_monte_carlo(options: VerifyOptions, seed: int, scale: float) -> List[PropertyResult]:
    """
    随机特征内积与精确核的偏差随 d 以 1/√d 下降

    每个 d 上取 mc_seeds 个随机样本种子，各自求 mc_pairs 对输入上的最大偏差再取平均；
    比较平均值之比，以及 mc_abs_d 处的平均最大偏差。
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(options.mc_pairs, MC_INPUT_DIM))
    Y = rng.uniform(0.0, 1.0, size=(options.mc_pairs, MC_INPUT_DIM))
    base_seeds = [seed * options.mc_seeds + k for k in range(options.mc_seeds)]
    threshold = MC_ABS_TOL * scale
    results = []
    for family in KernelFamily:
        spec = KernelSpec(family=family, sigma=(1.0,) * MC_INPUT_DIM)
        exact = np.array([kernel_eval(family, spec.sigma_array, spec.c, x, y) for x, y in zip(X, Y)])
        small, absolute, large = (
            float(np.mean([_max_pair_error(X, Y, exact, spec, d, s) for s in base_seeds]))
            for d in (options.mc_small_d, options.mc_abs_d, options.mc_large_d)
        )
        ratio = small / max(large, np.finfo(float).tiny)
        results.append(PropertyResult(
            name=f"monte_carlo_{family.value}",
            passed=absolute <= threshold and MC_RATIO_RANGE[0] <= ratio <= MC_RATIO_RANGE[1],
            value=absolute, threshold=threshold,
            detail=(f"seeds={options.mc_seeds} d={options.mc_small_d}:{small:.4g} "
                    f"d={options.mc_abs_d}:{absolute:.4g} d={options.mc_large_d}:{large:.4g} ratio={ratio:.3g}"),
        ))
    return results


def _gradient_problem(rng: np.random.Generator, family: KernelFamily) -> SklProblem:
    X = rng.uniform(0.0, 1.0, size=(30, 2))
    U = rng.uniform(0.0, 1.0, size=(15, 2))
    coef = rng.standard_normal(2)
    y = np.sin(2.0 * np.pi * X @ coef) + 0.1 * rng.standard_normal(30)
    v = np.sin(2.0 * np.pi * U @ coef) + 0.1 * rng.standard_normal(15)
    return SklProblem(X=X, y=y, U=U, v=v, rho=1e-3, lam=0.5, family=family)


def check_gradients(options: VerifyOptions, seed: int, scale: float) -> List[PropertyResult]:
    """解析梯度对中心差分的相对误差"""
    rng = np.random.default_rng(seed + 1)
    results = []
    for family in KernelFamily:
        worst = 0.0
        for draw in range(options.gradient_draws):
            problem = _gradient_problem(rng, family)
            base = sample_base(problem.m, 40, seed + draw)
            sigma = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=problem.m))
            _, analytic = objective_and_gradient(sigma, problem, base)
            numeric = central_difference(lambda s: validation_objective(s, problem, base), sigma)
            error = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), np.finfo(float).tiny)
            worst = max(worst, float(error))
        threshold = GRADIENT_REL_TOL * scale
        results.append(PropertyResult(name=f"gradient_{family.value}", passed=worst <= threshold,
                                      value=worst, threshold=threshold,
                                      detail=f"draws={options.gradient_draws}"))
    return results


def check_loss_sandwich(scale: float) -> List[PropertyResult]:
    """0 ≤ igll 且 |igll − max(0, |f−y|−ε)| ≤ 4ln2/γ"""
    residuals = np.linspace(-2.0, 2.0, 4001)
    y = np.zeros_like(residuals)
    results = []
    for gamma in LOSS_GAMMAS:
        smooth = igll_loss(y, residuals, LOSS_EPSILON, gamma)
        gap = float(np.max(np.abs(smooth - epsilon_insensitive(y, residuals, LOSS_EPSILON))))
        threshold = 4.0 * np.log(2.0) / gamma * scale
        passed = gap <= threshold and float(np.min(smooth)) >= 0.0
        results.append(PropertyResult(name=f"loss_sandwich_gamma_{gamma:g}", passed=passed,
                                      value=gap, threshold=threshold))
    return results


def check_weight_bound(seed: int, scale: float) -> List[PropertyResult]:
    """½||w||²/d + d ≥ √2||w||，等号在 d = ||w||/√2 处成立"""
    rng = np.random.default_rng(seed + 2)
    worst_violation = 0.0
    worst_equality = 0.0
    for _ in range(WEIGHT_BOUND_DRAWS):
        w = rng.standard_normal(rng.integers(1, 8)) * np.exp(rng.uniform(-3.0, 3.0))
        d = float(np.exp(rng.uniform(-5.0, 5.0)))
        norm = float(np.linalg.norm(w))
        worst_violation = max(worst_violation, -weight_bound_gap(w, d) / max(norm, 1.0))
        worst_equality = max(worst_equality, abs(weight_bound_gap(w, norm / np.sqrt(2.0))) / max(norm, 1.0))
    threshold = WEIGHT_BOUND_TOL * scale
    return [
        PropertyResult(name="weight_bound_inequality", passed=worst_violation <= threshold,
                       value=worst_violation, threshold=threshold, detail=f"draws={WEIGHT_BOUND_DRAWS}"),
        PropertyResult(name="weight_bound_equality", passed=worst_equality <= threshold,
                       value=worst_equality, threshold=threshold),
    ]


def _equivalence_gaps(gf, y: np.ndarray, C: float, loss: LossSpec, prox: ProxOptions):
    model = train_group_lasso(gf, y, gmkl_lambda(C), loss, prox)
    reference = gmkl_reference(gf, y, C, loss, GmklOptions())
    objective_gap = abs(reference.objective / C - model.objective) / max(abs(model.objective), np.finfo(float).tiny)
    weight_gap = float(np.max(np.abs(kernel_weights(model).d - reference.d)))
    return model, reference, objective_gap, weight_gap


def check_equivalence(options: VerifyOptions, seed: int, scale: float) -> List[PropertyResult]:
    """
    同一组特征上，λ = √2/C 的分组 Lasso 与 GMKL 交替解的目标和核权重一致（平方损失和 ε-IGLL 各一次），
    同时检查分组 Lasso 的分块最优性和 λ_max 处的零模型
    """
    specs = [KernelSpec(family=KernelFamily.GAUSSIAN, sigma=(2.0 * 2.0 ** t,) * 5) for t in range(options.equivalence_r)]
    planted = make_planted_mkl_problem(options.equivalence_n, m=5, r=options.equivalence_r,
                                       d_per_kernel=options.equivalence_d, seed=seed, specs=specs)
    gf, y = planted.features, planted.y
    C = options.equivalence_c
    prox = ProxOptions(max_iter=50_000, rel_tol=1e-12, kkt_tol=1e-7)
    threshold = EQUIVALENCE_TOL * scale
    kkt_threshold = KKT_TOL * scale

    quadratic = LossSpec(kind=LossKind.QUADRATIC)
    model, reference, objective_gap, weight_gap = _equivalence_gaps(gf, y, C, quadratic, prox)
    _, igll_reference, igll_objective_gap, igll_weight_gap = _equivalence_gaps(gf, y, C, LossSpec(), prox)

    lam_max = lambda_max(gf.F, y, gf.groups, quadratic)
    zero_model = train_group_lasso(gf, y, lam_max, quadratic, prox)
    nonzero = int(np.count_nonzero(zero_model.w))

    return [
        PropertyResult(name="equivalence_objective", passed=objective_gap <= threshold,
                       value=objective_gap, threshold=threshold,
                       detail=f"gl={model.objective:.10g} gmkl/C={reference.objective / C:.10g}"),
        PropertyResult(name="equivalence_kernel_weights", passed=weight_gap <= threshold,
                       value=weight_gap, threshold=threshold),
        PropertyResult(name="equivalence_igll_objective", passed=igll_objective_gap <= threshold,
                       value=igll_objective_gap, threshold=threshold,
                       detail=f"gmkl/C={igll_reference.objective / C:.10g}"),
        PropertyResult(name="equivalence_igll_kernel_weights", passed=igll_weight_gap <= threshold,
                       value=igll_weight_gap, threshold=threshold),
        PropertyResult(name="block_optimality", passed=model.converged and model.kkt_residual <= kkt_threshold,
                       value=model.kkt_residual, threshold=kkt_threshold,
                       detail=f"iterations={model.iterations}"),
        PropertyResult(name="lambda_max_zero_model", passed=nonzero == 0, value=float(nonzero), threshold=0.0,
                       detail=f"lambda_max={lam_max:.6g}"),
    ]


def check_artifact(path: Path) -> PropertyResult:
    """模型产物可以完整读回"""
    try:
        kind = load_json(path).get("kind")
        if kind == "ridge_model":
            RidgeModel.load(path)
        elif kind == "group_lasso_model":
            GroupedLinearModel.load(path)
        else:
            raise ArtifactError(f"unsupported artifact kind {kind!r}", path=str(path))
    except ArtifactError as e:
        return PropertyResult(name="artifact_integrity", passed=False, value=1.0, threshold=0.0, detail=e.message)
    return PropertyResult(name="artifact_integrity", passed=True, value=0.0, threshold=0.0, detail=str(path))


def run_verification(options: Optional[VerifyOptions] = None, seed: int = 0) -> VerifyReport:
    """运行全部性质，单个性质失败不影响其余性质"""
    options = options or VerifyOptions()
    scale = options.tolerance_scale
    report = VerifyReport(tolerance_scale=scale)
    report.results.extend(check_monte_carlo(options, seed, scale))
    report.results.extend(check_gradients(options, seed, scale))
    report.results.extend(check_loss_sandwich(scale))
    report.results.extend(check_weight_bound(seed, scale))
    report.results.extend(check_equivalence(options, seed, scale))
    if options.artifact_path is not None:
        report.results.append(check_artifact(Path(options.artifact_path)))

    for result in report.results:
        log = logger.info if result.passed else logger.warning
        log(f"性质校验 | {result.line()}")
    return report
