"""Symbolic operator product expansions for two-dimensional chiral fields.

Declare a field algebra by its singular OPE table, then compute residue
products, normal forms, contractions, and both generalized Wick
expansions; validate tables against skew symmetry and the Borcherds
identity; and cross-check every symbolic result against exact mode
matrices on truncated highest-weight modules.
"""

from .errors import (
    AlgebraError,
    OpeAlgError,
    OracleError,
    ParseError,
    ScalarDomainError,
    StepBudgetExceeded,
    UnknownGeneratorError,
)
from .scalars import QI, Scalar, ScalarRing, gbinom
from .expr import (
    Deriv,
    Gen,
    Ident,
    NormalForm,
    Prod,
    Sum,
    deriv,
    expr_weight,
    gen,
    ident,
    lincomb,
    nop,
    prod,
    scale,
)
from .algebra import (
    Algebra,
    check_algebra_consistency,
    ConsistencyReport,
    define_algebra,
    GeneratorDecl,
    preset_current_algebra,
    preset_free_boson,
    preset_su2,
    preset_virasoro,
)
from .engine import DEFAULT_STEP_BUDGET, Engine
from .wick import contour_kernel, render_ope, SingularSeries, wick_left, wick_right
from .borcherds import borcherds_sides, BorcherdsReport, check_borcherds
from .oracle import build_module, GradedModule, OracleVerifyReport, verify_against_symbolic
from .cli import (
    parse_algebra_file,
    parse_algebra_text,
    parse_expr_text,
    render_algebra_text,
    render_expr_text,
    render_result,
)

__version__ = "0.1.0"

__all__ = [
    "Algebra",
    "AlgebraError",
    "BorcherdsReport",
    "borcherds_sides",
    "build_module",
    "check_algebra_consistency",
    "check_borcherds",
    "ConsistencyReport",
    "contour_kernel",
    "DEFAULT_STEP_BUDGET",
    "define_algebra",
    "Deriv",
    "deriv",
    "Engine",
    "expr_weight",
    "Gen",
    "gen",
    "GeneratorDecl",
    "GradedModule",
    "gbinom",
    "Ident",
    "ident",
    "lincomb",
    "nop",
    "NormalForm",
    "OpeAlgError",
    "OracleError",
    "OracleVerifyReport",
    "ParseError",
    "parse_algebra_file",
    "parse_algebra_text",
    "parse_expr_text",
    "preset_current_algebra",
    "preset_free_boson",
    "preset_su2",
    "preset_virasoro",
    "Prod",
    "prod",
    "QI",
    "render_algebra_text",
    "render_expr_text",
    "render_ope",
    "render_result",
    "Scalar",
    "ScalarDomainError",
    "ScalarRing",
    "scale",
    "SingularSeries",
    "StepBudgetExceeded",
    "Sum",
    "UnknownGeneratorError",
    "verify_against_symbolic",
    "wick_left",
    "wick_right",
]
