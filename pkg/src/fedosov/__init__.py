"""Exact Fedosov star products on linear symplectic orbifold charts."""

from .chart import (
    Chart,
    check_chart_morphism,
    check_connection_invariance,
    load_chart,
    poisson_bracket,
    symplectize_connection,
)
from .engine import (
    FedosovData,
    StarSeries,
    D_apply,
    build_gamma_form,
    curvature_R,
    nabla_apply,
    quantize,
    solve_chart,
    solve_r,
    star_product,
    verify_dq_axioms,
    weyl_curvature_Omega,
)
from .errors import (
    ConvergenceError,
    DivisibilityError,
    FedosovError,
    FlatnessError,
    GroupBoundError,
    ParseError,
    StructuralError,
)
from .groups import (
    FiniteGroup,
    StratumDescriptor,
    check_symplectic_action,
    classify_point,
    enumerate_group,
    orbit_type_stratification,
    reynolds_average,
    verify_hilbert_basis,
)
from .poly import BasePoly
from .scalar import Scalar
from .text import format_poly, format_weyl, parse_poly, parse_weyl
from .weyl import (
    TruncationPolicy,
    WeylForm,
    act_group_element,
    delta,
    delta_minus,
    delta_star,
    graded_commutator,
    hodge_decompose,
    lambda_divide,
    moyal_mul,
    symbol,
)

__all__ = [
    "BasePoly",
    "Chart",
    "ConvergenceError",
    "D_apply",
    "DivisibilityError",
    "FedosovData",
    "FedosovError",
    "FiniteGroup",
    "FlatnessError",
    "GroupBoundError",
    "ParseError",
    "Scalar",
    "StarSeries",
    "StratumDescriptor",
    "StructuralError",
    "TruncationPolicy",
    "WeylForm",
    "act_group_element",
    "build_gamma_form",
    "check_chart_morphism",
    "check_connection_invariance",
    "check_symplectic_action",
    "classify_point",
    "curvature_R",
    "delta",
    "delta_minus",
    "delta_star",
    "enumerate_group",
    "format_poly",
    "format_weyl",
    "graded_commutator",
    "hodge_decompose",
    "lambda_divide",
    "load_chart",
    "moyal_mul",
    "nabla_apply",
    "orbit_type_stratification",
    "parse_poly",
    "parse_weyl",
    "poisson_bracket",
    "quantize",
    "reynolds_average",
    "solve_chart",
    "solve_r",
    "star_product",
    "symbol",
    "symplectize_connection",
    "verify_dq_axioms",
    "verify_hilbert_basis",
    "weyl_curvature_Omega",
]
