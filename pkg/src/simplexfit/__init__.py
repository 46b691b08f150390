# simplexfit - nonlinear simplex regression with varying dispersion
__version__ = "0.1.0"

from simplexfit.model import ModelSpec, assemble, link_eval, log_likelihood  # noqa: E402
from simplexfit.tools.data import Dataset, load_dataset, simulate_dataset  # noqa: E402
from simplexfit.tools.diagnostics import (  # noqa: E402
    delete_and_refit,
    influence,
    influence_all,
    simulated_envelope,
    weighted_residuals,
)
from simplexfit.tools.estimation import fit, inference_table  # noqa: E402

__all__ = [
    "Dataset",
    "ModelSpec",
    "assemble",
    "delete_and_refit",
    "fit",
    "inference_table",
    "influence",
    "influence_all",
    "link_eval",
    "load_dataset",
    "log_likelihood",
    "simulate_dataset",
    "simulated_envelope",
    "weighted_residuals",
]
