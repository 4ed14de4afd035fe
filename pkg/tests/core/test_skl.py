import csv

import numpy as np
import pytest

from app.core.bench import central_difference, make_planted_skl_problem
from app.core.feature_map import embed, sample_base
from app.core.skl import (
    TRACE_COLUMNS,
    RidgeModel,
    SklProblem,
    factorize_gram,
    krr_objective_and_gradient,
    krr_validation_objective,
    learn_hyperparameters,
    learn_hyperparameters_krr,
    minimize_log_sigma,
    objective_and_gradient,
    solve_ridge,
    validation_gradient,
    validation_objective,
)
from app.models.kernel_spec import KernelFamily
from app.models.run_config import OptimizerMethod, OptimizerOptions
from app.utils.exceptions import (
    ArtifactError,
    DimensionError,
    InitializationError,
    NumericError,
    ParameterError,
)


def small_problem(seed=0, family=KernelFamily.GAUSSIAN, rho=1e-3, lam=0.5):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(30, 2))
    U = rng.uniform(size=(15, 2))
    y = np.sin(2.0 * np.pi * X[:, 0]) + X[:, 1]
    v = np.sin(2.0 * np.pi * U[:, 0]) + U[:, 1]
    return SklProblem(X=X, y=y, U=U, v=v, rho=rho, lam=lam, family=family)


class TestSolveRidge:
    def test_interpolates_at_tiny_lambda(self):
        beta = solve_ridge(np.array([[1.0]]), np.array([1.0]), 1e-12)
        assert beta[0] == pytest.approx(1.0, abs=1e-10)

    def test_hand_arithmetic(self):
        beta = solve_ridge(np.array([[1.0], [1.0]]), np.array([1.0, 1.0]), 1.0)
        assert beta[0] == pytest.approx(2.0 / 3.0, rel=1e-14)

    def test_normal_equation_residual(self, rng):
        Phi = rng.standard_normal((50, 10))
        y = rng.standard_normal(50)
        beta = solve_ridge(Phi, y, 0.3)
        residual = (Phi.T @ Phi + 0.3 * np.eye(10)) @ beta - Phi.T @ y
        assert np.linalg.norm(residual) <= 1e-10

    def test_accepts_feature_matrix(self, rng):
        base = sample_base(2, 20, seed=0)
        spec = small_problem().spec([1.0, 1.0])
        features = embed(rng.uniform(size=(12, 2)), spec, base)
        y = rng.standard_normal(12)
        assert np.array_equal(solve_ridge(features, y, 1.0), solve_ridge(features.values, y, 1.0))

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_non_positive_lambda(self, lam):
        with pytest.raises(ParameterError):
            solve_ridge(np.ones((2, 1)), np.ones(2), lam)

    def test_non_finite_inputs(self):
        with pytest.raises(NumericError):
            solve_ridge(np.array([[np.nan], [1.0]]), np.ones(2), 1.0)

    def test_row_mismatch(self):
        with pytest.raises(DimensionError):
            solve_ridge(np.ones((3, 2)), np.ones(2), 1.0)

    def test_ill_conditioned_system_gets_jitter(self):
        factor, jitter = factorize_gram(np.ones((3, 3)))
        assert jitter > 0.0
        assert np.all(np.isfinite(factor[0]))


class TestValidationObjective:
    def test_zero_residual(self):
        problem = small_problem(rho=0.0)
        base = sample_base(2, 40, seed=1)
        spec = problem.spec([1.0, 2.0])
        beta = solve_ridge(embed(problem.X, spec, base), problem.y, problem.lam)
        exact = SklProblem(X=problem.X, y=problem.y, U=problem.U, v=embed(problem.U, spec, base).values @ beta,
                           rho=0.0, lam=problem.lam)
        assert validation_objective([1.0, 2.0], exact, base) < 1e-20
        assert np.max(np.abs(validation_gradient([1.0, 2.0], exact, base))) < 1e-8

    def test_regularizer_is_additive(self):
        base = sample_base(2, 40, seed=1)
        sigma = np.array([0.7, 1.9])
        plain = validation_objective(sigma, small_problem(rho=0.0), base)
        regularized = validation_objective(sigma, small_problem(rho=0.25), base)
        assert regularized - plain == pytest.approx(0.25 * sigma @ sigma, rel=1e-10)

    def test_matches_independent_recomputation(self):
        problem = small_problem()
        base = sample_base(2, 40, seed=3)
        sigma = np.array([1.3, 0.6])
        spec = problem.spec(sigma)
        Phi = embed(problem.X, spec, base).values
        Phi_U = embed(problem.U, spec, base).values
        beta = np.linalg.solve(Phi.T @ Phi + problem.lam * np.eye(40), Phi.T @ problem.y)
        expected = np.sum((Phi_U @ beta - problem.v) ** 2) + problem.rho * sigma @ sigma
        assert validation_objective(sigma, problem, base) == pytest.approx(expected, rel=1e-9)

    def test_value_agrees_with_gradient_routine(self):
        problem = small_problem()
        base = sample_base(2, 40, seed=3)
        value, _ = objective_and_gradient([1.1, 0.9], problem, base)
        assert value == validation_objective([1.1, 0.9], problem, base)

    def test_mismatched_columns(self, rng):
        with pytest.raises(DimensionError):
            SklProblem(X=rng.uniform(size=(5, 2)), y=np.ones(5), U=rng.uniform(size=(3, 3)), v=np.ones(3))


class TestValidationGradient:
    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_matches_central_difference(self, family):
        rng = np.random.default_rng(7)
        problem = small_problem(seed=2, family=family)
        base = sample_base(2, 40, seed=5)
        for _ in range(10):
            sigma = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=2))
            analytic = validation_gradient(sigma, problem, base)
            numeric = central_difference(lambda s: validation_objective(s, problem, base), sigma)
            assert np.linalg.norm(analytic - numeric) <= 1e-4 * max(np.linalg.norm(numeric), 1e-8)

    def test_large_lambda_leaves_regularizer(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(size=(20, 2))
        y = rng.standard_normal(20)
        problem = SklProblem(X=X, y=y, U=X, v=y, rho=0.5, lam=1e12)
        sigma = np.array([1.0, 2.0])
        grad = validation_gradient(sigma, problem, sample_base(2, 30, seed=0))
        assert np.allclose(grad, 2.0 * 0.5 * sigma, rtol=1e-6)


class TestOptimizer:
    def test_stationary_start_returns_immediately(self):
        def bowl(sigma):
            log_sigma = np.log(sigma)
            return float(log_sigma @ log_sigma), 2.0 * log_sigma / sigma

        sigma, trace = minimize_log_sigma(bowl, [1.0, 1.0])
        assert trace.accepted_steps == 0
        assert trace.converged
        assert trace.reason == "stationary_start"
        assert np.array_equal(sigma, [1.0, 1.0])

    def test_descends_to_bowl_minimum(self):
        target = np.array([0.5, 3.0])

        def bowl(sigma):
            diff = np.log(sigma) - np.log(target)
            return float(diff @ diff), 2.0 * diff / sigma

        sigma, trace = minimize_log_sigma(bowl, [1.0, 1.0], OptimizerOptions(rel_tol=1e-14, grad_tol=1e-10))
        assert np.allclose(sigma, target, rtol=1e-4)
        assert np.all(np.diff(trace.objectives) <= 0.0)

    def test_ascent_direction_reports_stalled_line_search(self):
        def wrong_sign(sigma):
            log_sigma = np.log(sigma)
            return float(log_sigma @ log_sigma), -2.0 * log_sigma / sigma

        start = np.exp([2.0])
        sigma, trace = minimize_log_sigma(wrong_sign, start, OptimizerOptions(max_backtracks=3))
        assert not trace.converged
        assert trace.reason == "line_search_stalled"
        assert trace.accepted_steps == 0
        assert np.allclose(sigma, start, rtol=1e-12)

    def test_non_finite_start(self):
        with pytest.raises(InitializationError):
            minimize_log_sigma(lambda s: (float("nan"), np.zeros_like(s)), [1.0])

    def test_rejects_non_positive_start(self):
        with pytest.raises(ParameterError):
            minimize_log_sigma(lambda s: (0.0, np.zeros_like(s)), [0.0])

    @pytest.mark.parametrize("method", list(OptimizerMethod))
    def test_trace_is_non_increasing(self, method, tmp_path):
        planted = make_planted_skl_problem(80, 40, m=2, seed=3)
        base = sample_base(2, 100, seed=0)
        options = OptimizerOptions(method=method, max_iter=30)
        sigma, model, trace = learn_hyperparameters(planted.problem, [1.0, 1.0], options, base)
        assert np.all(np.diff(trace.objectives) <= 0.0)
        assert trace.objectives[-1] <= trace.objectives[0]
        assert np.all(sigma > 0)

        with open(trace.to_csv(tmp_path / "trace.csv"), newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == TRACE_COLUMNS
        assert len(rows) == len(trace.records) + 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            learn_hyperparameters(small_problem(), [1.0], None, sample_base(2, 10, seed=0))

    @pytest.mark.slow
    def test_beats_isotropic_grid(self):
        planted = make_planted_skl_problem(200, 100, m=2, sigma_true=2.0, seed=0)
        base = sample_base(2, 300, seed=1)
        options = OptimizerOptions(max_iter=200)
        sigma, _, trace = learn_hyperparameters(planted.problem, [1.0, 1.0], options, base)
        learned = validation_objective(sigma, planted.problem, base)
        grid = [validation_objective([s, s], planted.problem, base) for s in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)]
        assert learned <= min(grid) * 1.05


class TestRidgeModel:
    def test_save_load_predictions_bit_exact(self, tmp_path, rng):
        planted = make_planted_skl_problem(40, 20, m=2, seed=1)
        base = sample_base(2, 50, seed=9)
        _, model, _ = learn_hyperparameters(planted.problem, [1.0, 1.0], OptimizerOptions(max_iter=3), base)
        loaded = RidgeModel.load(model.save(tmp_path / "model.json"))
        X = rng.uniform(size=(10, 2))
        assert np.array_equal(loaded.predict(X, base), model.predict(X, base))
        assert loaded.spec == model.spec

    def test_rejects_foreign_base_sample(self, rng):
        spec = small_problem().spec([1.0, 1.0])
        model = RidgeModel(beta=np.zeros(10), lam=1.0, spec=spec, d=10, seed=0)
        with pytest.raises(ArtifactError):
            model.predict(rng.uniform(size=(2, 2)), sample_base(2, 10, seed=1))

    def test_corrupted_artifact(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"kind": "ridge_model", "sigma": [1.0]}')
        with pytest.raises(ArtifactError):
            RidgeModel.load(path)


class TestExactKernelBaseline:
    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_gradient_matches_central_difference(self, family):
        problem = small_problem(seed=4, family=family)
        sigma = np.array([0.9, 1.4])
        _, analytic = krr_objective_and_gradient(sigma, problem)
        numeric = central_difference(lambda s: krr_validation_objective(s, problem), sigma)
        assert np.linalg.norm(analytic - numeric) <= 1e-4 * max(np.linalg.norm(numeric), 1e-8)

    def test_learning_reduces_objective(self):
        problem = make_planted_skl_problem(60, 30, m=2, seed=2).problem
        sigma, alpha, trace = learn_hyperparameters_krr(problem, [1.0, 1.0], OptimizerOptions(max_iter=20))
        assert alpha.shape == (60,)
        assert trace.objectives[-1] <= trace.objectives[0]
        assert krr_validation_objective(sigma, problem) == pytest.approx(trace.objectives[-1], rel=1e-10)
