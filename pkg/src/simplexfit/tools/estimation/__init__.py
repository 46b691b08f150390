from simplexfit.tools.estimation.fitting import (
    FittedModel,
    InferenceRow,
    IterationRecord,
    fit,
    inference_table,
    require_converged,
)
from simplexfit.tools.estimation.information import (
    fisher_information,
    hessian,
    observed_information,
    score,
)
from simplexfit.tools.estimation.starting_values import StartingValues, starting_values

__all__ = [
    "FittedModel",
    "InferenceRow",
    "IterationRecord",
    "StartingValues",
    "fisher_information",
    "fit",
    "hessian",
    "inference_table",
    "observed_information",
    "require_converged",
    "score",
    "starting_values",
]
