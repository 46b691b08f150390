from simplexfit.tools.formula.derivatives import (
    CompiledPredictor,
    DerivativeBundle,
    PredictorValues,
    compile_predictor,
    differentiate,
)
from simplexfit.tools.formula.parser import parse
from simplexfit.tools.formula.tree import (
    ExpressionTree,
    is_linear_in,
    nonlinear_parameters,
    substitute,
    to_string,
)

__all__ = [
    "CompiledPredictor",
    "DerivativeBundle",
    "ExpressionTree",
    "PredictorValues",
    "compile_predictor",
    "differentiate",
    "is_linear_in",
    "nonlinear_parameters",
    "parse",
    "substitute",
    "to_string",
]
