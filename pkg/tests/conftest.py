import os
from pathlib import Path

import numpy as np
import pytest

from simplexfit.model import ModelSpec
from simplexfit.schemas import CovariateDistribution, DispersionSubmodel, GeneratorSpec, MeanSubmodel
from simplexfit.tools.data import Dataset, load_dataset, simulate_dataset
from simplexfit.tools.estimation import fit

ROOT = Path(__file__).resolve().parents[1]

LINEAR_TRUTH = {"b1": 0.8, "b2": -1.2, "g1": -2.5, "g2": 1.5}
NONLINEAR_TRUTH = {"b1": -1.7, "b2": -1.8, "b3": 1.2, "b4": -1.3, "g1": -3.0, "g2": -1.6}
FCC_TRUTH = {"b1": 0.5, "b2": 1.0, "b3": -15.0, "b4": 0.4, "b5": -0.8, "g1": -3.0, "g2": 1.0}

FCC_MEAN = "b1 + b2*steam/(steam + b3) + b4*temp + b5*sqrt(vanadium)"
FCC_DISPERSION = "g1 + g2*vanadium^2"


def linear_generator(n: int = 120) -> GeneratorSpec:
    return GeneratorSpec(
        mean=MeanSubmodel(formula="b1 + b2*x2"),
        dispersion=DispersionSubmodel(formula="g1 + g2*z2"),
        parameters=LINEAR_TRUTH,
        n=n,
        covariates={
            "x2": CovariateDistribution(low=-1.0, high=1.0),
            "z2": CovariateDistribution(low=0.0, high=1.0),
        },
    )


def nonlinear_generator(n: int = 150) -> GeneratorSpec:
    return GeneratorSpec(
        mean=MeanSubmodel(formula="b1 + x2^b2 + b3*x3 + b4*x4"),
        dispersion=DispersionSubmodel(formula="g1 + z2^g2"),
        parameters=NONLINEAR_TRUTH,
        n=n,
        covariates={
            "x2": CovariateDistribution(low=0.5, high=1.5),
            "x3": CovariateDistribution(low=0.0, high=1.0),
            "x4": CovariateDistribution(low=-0.5, high=0.5),
            "z2": CovariateDistribution(low=0.5, high=1.5),
        },
    )


def fcc_generator(n: int = 200) -> GeneratorSpec:
    return GeneratorSpec(
        mean=MeanSubmodel(formula=FCC_MEAN),
        dispersion=DispersionSubmodel(formula=FCC_DISPERSION),
        parameters=FCC_TRUTH,
        n=n,
        covariates={
            "steam": CovariateDistribution(
                distribution="zero_inflated_uniform", low=30.0, high=80.0, zero_fraction=0.15
            ),
            "temp": CovariateDistribution(distribution="choice", values=[0.0, 1.0]),
            "vanadium": CovariateDistribution(
                distribution="zero_inflated_uniform", low=0.0, high=1.0, zero_fraction=0.25
            ),
        },
        response="crystallinity",
    )


@pytest.fixture(scope="session")
def linear_spec() -> ModelSpec:
    return ModelSpec.from_formulas(mean="b1 + b2*x2", dispersion="g1 + g2*z2")


@pytest.fixture(scope="session")
def linear_data() -> Dataset:
    return simulate_dataset(linear_generator(), seed=11)


@pytest.fixture(scope="session")
def linear_fit(linear_spec, linear_data):
    fitted = fit(linear_spec, linear_data)
    assert fitted.converged
    return fitted


@pytest.fixture(scope="session")
def nonlinear_spec() -> ModelSpec:
    return ModelSpec.from_formulas(
        mean="b1 + x2^b2 + b3*x3 + b4*x4",
        dispersion="g1 + z2^g2",
        pinned_starts={"b2": NONLINEAR_TRUTH["b2"], "g2": NONLINEAR_TRUTH["g2"]},
    )


@pytest.fixture(scope="session")
def nonlinear_data() -> Dataset:
    return simulate_dataset(nonlinear_generator(), seed=23)


@pytest.fixture(scope="session")
def nonlinear_fit(nonlinear_spec, nonlinear_data):
    fitted = fit(nonlinear_spec, nonlinear_data)
    assert fitted.converged
    return fitted


@pytest.fixture(scope="session")
def fcc_spec() -> ModelSpec:
    return ModelSpec.from_formulas(mean=FCC_MEAN, dispersion=FCC_DISPERSION, pinned_starts={"b3": -20.0})


@pytest.fixture(scope="session")
def fcc_data() -> Dataset:
    return simulate_dataset(fcc_generator(), seed=7)


@pytest.fixture(scope="session")
def reading_data() -> Dataset:
    path = os.getenv("SIMPLEXFIT_READING_DATA")
    if not path or not Path(path).exists():
        pytest.skip("SIMPLEXFIT_READING_DATA is not set")
    return load_dataset(path, "accuracy")


def central_gradient(f, theta: np.ndarray, step: float = 1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = step * max(1.0, abs(theta[i]))
        grad[i] = (f(theta + e) - f(theta - e)) / (2.0 * e[i])
    return grad


def central_jacobian(f, theta: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Rows are outputs, columns are inputs."""
    theta = np.asarray(theta, dtype=float)
    columns = []
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = step * max(1.0, abs(theta[i]))
        columns.append((np.asarray(f(theta + e)) - np.asarray(f(theta - e))) / (2.0 * e[i]))
    return np.column_stack(columns)
