"""Singular vector tuples, critical spaces and the span of Z_T for tensors beyond boundary format."""

from .bbw import CohomologyAnswer, bbw_resolve, h_E, h_omega, weyl_dim
from .critical import (
    DenseTensor,
    alpha_matrix,
    critical_dim,
    critical_equations,
    koszul_oracle,
    span_codim_via_alpha,
)
from .exactla import ExactMatrix, generic_rank, kernel_basis, random_tensor, rank
from .formats import (
    FormatClass,
    TensorFormat,
    beyond_by_one,
    classify,
    critical_dim_formula,
    dimension_inequality,
    exception_scan,
)
from .polyarith import SparsePoly, ed_degree, fo_factor
from .sweep import SweepRow
from .zsolver import SingularTuple, TupleSolveReport, solve_singular_tuples, span_codim_in_H

__version__ = "0.1.0"

__all__ = [
    "CohomologyAnswer",
    "DenseTensor",
    "ExactMatrix",
    "FormatClass",
    "SingularTuple",
    "SparsePoly",
    "SweepRow",
    "TensorFormat",
    "TupleSolveReport",
    "alpha_matrix",
    "bbw_resolve",
    "beyond_by_one",
    "classify",
    "critical_dim",
    "critical_dim_formula",
    "critical_equations",
    "dimension_inequality",
    "ed_degree",
    "exception_scan",
    "fo_factor",
    "generic_rank",
    "h_E",
    "h_omega",
    "kernel_basis",
    "koszul_oracle",
    "random_tensor",
    "rank",
    "solve_singular_tuples",
    "span_codim_in_H",
    "span_codim_via_alpha",
    "weyl_dim",
]
