from simplexfit.tools.data.datasets import Dataset, load_dataset, write_dataset
from simplexfit.tools.data.simulation import (
    ScenarioResult,
    draw_covariates,
    run_scenario,
    run_study,
    simulate_dataset,
)

__all__ = [
    "Dataset",
    "ScenarioResult",
    "draw_covariates",
    "load_dataset",
    "run_scenario",
    "run_study",
    "simulate_dataset",
    "write_dataset",
]
