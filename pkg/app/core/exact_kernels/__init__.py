from app.core.exact_kernels.kernels import (
    GramMatrix,
    gram,
    gram_derivative,
    kernel_eval,
    skewed_chi2_ratio_form,
    skewed_intersection_min_form,
)

__all__ = [
    "GramMatrix",
    "gram",
    "gram_derivative",
    "kernel_eval",
    "skewed_chi2_ratio_form",
    "skewed_intersection_min_form",
]
