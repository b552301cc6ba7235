"""Exact symbolic kernel: canonical rational functions with atom rules."""
from .core import (
    CONSTANT,
    COORDINATE,
    DYNAMIC,
    Atom,
    Context,
    RationalExpr,
    compile_float,
    constant,
    differentiate,
    dynamic,
    evaluate_exact,
    evaluate_float,
    format_poly,
    is_zero,
    jet,
    normalize,
    substitute,
)
from .errors import (
    ContextMismatch,
    ExprSyntaxError,
    InconsistentAlgebraicValue,
    PoleAtPoint,
    SymcoreError,
    UndeclaredSymbol,
    UndefinedDerivative,
    ZeroDenominator,
)
from .parser import parse_expr
from .sampling import SplitMix64, ZeroTest, probable_zero, random_point

__all__ = [
    "CONSTANT", "COORDINATE", "DYNAMIC", "Atom", "Context", "RationalExpr",
    "compile_float", "constant", "differentiate", "dynamic", "evaluate_exact",
    "evaluate_float", "format_poly", "is_zero", "jet", "normalize", "substitute",
    "ContextMismatch", "ExprSyntaxError", "InconsistentAlgebraicValue", "PoleAtPoint",
    "SymcoreError", "UndeclaredSymbol", "UndefinedDerivative", "ZeroDenominator",
    "parse_expr", "SplitMix64", "ZeroTest", "probable_zero", "random_point",
]
