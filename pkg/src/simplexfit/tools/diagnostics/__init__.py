from simplexfit.tools.diagnostics.deletion import (
    DeletionResult,
    ParameterChange,
    delete_and_refit,
    delete_and_refit_many,
)
from simplexfit.tools.diagnostics.envelope import EnvelopeBands, simulated_envelope
from simplexfit.tools.diagnostics.influence import (
    InfluenceReport,
    influence,
    influence_all,
    perturbation_matrix,
)
from simplexfit.tools.diagnostics.residuals import (
    ResidualReport,
    hat_matrix,
    residual_plot_data,
    residuals_from_state,
    weighted_residuals,
)

__all__ = [
    "DeletionResult",
    "EnvelopeBands",
    "InfluenceReport",
    "ParameterChange",
    "ResidualReport",
    "delete_and_refit",
    "delete_and_refit_many",
    "hat_matrix",
    "influence",
    "influence_all",
    "perturbation_matrix",
    "residual_plot_data",
    "residuals_from_state",
    "simulated_envelope",
    "weighted_residuals",
]
