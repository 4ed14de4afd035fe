from app.core.mkl.gmkl import GmklResult, gmkl_lambda, gmkl_objective, gmkl_reference, weight_bound_gap
from app.core.mkl.group_lasso import (
    GroupedLinearModel,
    KernelWeights,
    block_optimality_residual,
    block_prox,
    group_lasso_objective,
    kernel_weights,
    lambda_max,
    train_group_lasso,
)
from app.core.mkl.grouped import GroupedFeatures, build_grouped_features
from app.core.mkl.losses import (
    curvature_bound,
    epsilon_insensitive,
    igll_gradient,
    igll_loss,
    loss_derivative,
    loss_values,
    total_loss,
)

__all__ = [
    "GmklResult",
    "GroupedFeatures",
    "GroupedLinearModel",
    "KernelWeights",
    "block_optimality_residual",
    "block_prox",
    "build_grouped_features",
    "curvature_bound",
    "epsilon_insensitive",
    "gmkl_lambda",
    "gmkl_objective",
    "gmkl_reference",
    "group_lasso_objective",
    "igll_gradient",
    "igll_loss",
    "kernel_weights",
    "lambda_max",
    "loss_derivative",
    "loss_values",
    "total_loss",
    "train_group_lasso",
    "weight_bound_gap",
]
