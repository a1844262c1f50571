"""Pseudo-knockoff filter: FDR-controlled variable selection.

Companion-design constructions (orthogonal, block-diagonal, general
interleaved-class, and classical knockoff baselines), half-Lasso feature
statistics, knockoff+ thresholding, and certified/Monte-Carlo verifiers
for the selection ratio tail bounds.
"""

from ._core import (
    Construction,
    __version__,
    bound_at_t,
    build_sigma,
    construct,
    evaluate_selection,
    filter_select,
    half_lasso_statistics,
    knockoff_plus_threshold,
    least_squares_statistics,
    mc_fixed_t_expectation,
    mc_sup_ratio,
    mgf_product_bound,
    orthant_prob,
    read_matrix,
    sample_design,
    sample_response,
    sample_signal,
    signmax_statistics,
    sup_bound_constant,
    validate_construction,
    write_matrix_csv,
    write_matrix_npy,
)

__all__ = [
    "Construction",
    "__version__",
    "bound_at_t",
    "build_sigma",
    "construct",
    "evaluate_selection",
    "filter_select",
    "half_lasso_statistics",
    "knockoff_plus_threshold",
    "least_squares_statistics",
    "mc_fixed_t_expectation",
    "mc_sup_ratio",
    "mgf_product_bound",
    "orthant_prob",
    "read_matrix",
    "sample_design",
    "sample_response",
    "sample_signal",
    "signmax_statistics",
    "sup_bound_constant",
    "validate_construction",
    "write_matrix_csv",
    "write_matrix_npy",
]
