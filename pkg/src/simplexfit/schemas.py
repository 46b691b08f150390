from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

MeanLinkName = Literal["logit", "probit", "cloglog", "loglog"]
DispersionLinkName = Literal["log", "sqrt", "identity"]
SchemeName = Literal["case_weights", "response", "covariate"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


####################################
# Estimation
####################################

class FitOptions(_Strict):
    """Controls for the maximum-likelihood fit."""
    max_iterations: int = Field(200, ge=1, description="Iteration cap across all phases.")
    grad_tolerance: float = Field(1e-7, gt=0, description="Convergence tolerance on max |score|.")
    step_halving_max: int = Field(20, ge=0, description="Halvings tried before a step counts as stalled.")
    stall_limit: int = Field(3, ge=1, description="Consecutive stalls before switching to quasi-Newton.")
    algorithm: Literal["fisher_scoring", "quasi_newton", "hybrid"] = Field("hybrid")
    starting_mode: Literal["two_step", "user_supplied"] = Field("two_step")
    start_variant: Literal["derivation", "as_printed"] = Field(
        "derivation",
        description="'as_printed' drops the beta_L offset from the nonlinear starting step.",
    )
    beta_start: Optional[Dict[str, float]] = Field(None, description="Mean starting values for user_supplied mode.")
    gamma_start: Optional[Dict[str, float]] = Field(None, description="Dispersion starting values for user_supplied mode.")

    @model_validator(mode="after")
    def _user_starts_present(self):
        if self.starting_mode == "user_supplied" and (self.beta_start is None or self.gamma_start is None):
            raise ValueError("starting_mode 'user_supplied' requires beta_start and gamma_start")
        return self


####################################
# Model
####################################

class MeanSubmodel(_Strict):
    formula: str = Field(..., min_length=1, description="Mean predictor, e.g. 'b1 + b2*x2'.")
    link: MeanLinkName = Field("logit")
    parameters: Optional[List[str]] = Field(None, description="Declared parameter names; overrides the prefix rule.")
    parameter_prefix: str = Field("b", description="Identifiers of the form <prefix><digits> are parameters.")


class DispersionSubmodel(_Strict):
    formula: str = Field("g1", min_length=1, description="Dispersion predictor, e.g. 'g1 + g2*z2'.")
    link: DispersionLinkName = Field("log")
    parameters: Optional[List[str]] = Field(None)
    parameter_prefix: str = Field("g")


class DataConfig(_Strict):
    path: str = Field(..., description="Comma-separated file with a header row.")
    response: str = Field(..., description="Name of the response column.")


####################################
# Diagnostics
####################################

class EnvelopeConfig(_Strict):
    replicates: int = Field(100, ge=19)
    refit: bool = Field(True, description="Refit every simulated response vector.")


class CovariatePerturbation(_Strict):
    mean: Optional[str] = Field(None, description="Covariate perturbed in the mean submodel.")
    dispersion: Optional[str] = Field(None, description="Covariate perturbed in the dispersion submodel.")

    @model_validator(mode="after")
    def _one_named(self):
        if self.mean is None and self.dispersion is None:
            raise ValueError("covariate perturbation needs a mean or dispersion covariate")
        return self


class InfluenceConfig(_Strict):
    schemes: List[SchemeName] = Field(default_factory=lambda: ["case_weights", "response"])
    covariate: Optional[CovariatePerturbation] = None
    deletion_sets: List[List[int]] = Field(
        default_factory=list, description="Case numbers (1-based) to delete and refit."
    )

    @model_validator(mode="after")
    def _covariate_named(self):
        if "covariate" in self.schemes and self.covariate is None:
            raise ValueError("scheme 'covariate' requires the 'covariate' section")
        for cases in self.deletion_sets:
            if any(c < 1 for c in cases):
                raise ValueError("deletion sets use 1-based case numbers")
        return self


####################################
# Simulation
####################################

class CovariateDistribution(_Strict):
    distribution: Literal["uniform", "normal", "choice", "zero_inflated_uniform"] = "uniform"
    low: float = 0.0
    high: float = 1.0
    mean: float = 0.0
    sd: float = Field(1.0, gt=0)
    values: Optional[List[float]] = None
    zero_fraction: float = Field(0.0, ge=0, lt=1)

    @model_validator(mode="after")
    def _check(self):
        if self.distribution in ("uniform", "zero_inflated_uniform") and not self.low < self.high:
            raise ValueError("uniform covariates need low < high")
        if self.distribution == "choice" and not self.values:
            raise ValueError("choice covariates need a non-empty 'values' list")
        return self


def _reference_covariates() -> Dict[str, CovariateDistribution]:
    return {
        "x2": CovariateDistribution(low=0.5, high=1.5),
        "x3": CovariateDistribution(low=0.0, high=1.0),
        "x4": CovariateDistribution(low=-0.5, high=0.5),
        "z2": CovariateDistribution(low=0.5, high=1.5),
    }


class MCScenario(_Strict):
    name: str
    beta: List[float]
    gamma: List[float]
    n: int = Field(40, ge=2, description="Sample size; a multiple of base_n.")
    base_n: int = Field(40, ge=2, description="Covariate rows drawn once and replicated up to n.")
    replications: int = Field(1000, ge=1)
    mean_formula: str = "b1 + x2^b2 + b3*x3 + b4*x4"
    dispersion_formula: str = "g1 + z2^g2"
    mean_link: MeanLinkName = "logit"
    dispersion_link: DispersionLinkName = "log"
    pinned: Optional[Dict[str, float]] = Field(
        None, description="Pinned starting values; defaults to the true values of nonlinear parameters."
    )
    covariates: Dict[str, CovariateDistribution] = Field(default_factory=_reference_covariates)

    @model_validator(mode="after")
    def _replicated_rows(self):
        if self.n % self.base_n != 0:
            raise ValueError(f"scenario '{self.name}': n={self.n} is not a multiple of base_n={self.base_n}")
        return self


_MEAN_SCENARIOS = {
    "mu_low": [-2.4, 1.4, -1.5, -1.7],
    "mu_central": [-1.7, -1.8, 1.2, -1.3],
    "mu_high": [2.1, -1.5, -1.6, -1.2],
}
_DISPERSION_SCENARIOS = {
    "lambda12": [-1.3, -1.6],
    "lambda45": [-1.3, -2.1],
    "lambda128": [-1.3, -2.4],
}


def reference_grid(replications: int = 1000) -> List[MCScenario]:
    """Mean ranges x dispersion intensities x sample sizes of the residual study."""
    return [
        MCScenario(name=f"{m}_{d}_n{n}", beta=beta, gamma=gamma, n=n, replications=replications)
        for m, beta in _MEAN_SCENARIOS.items()
        for d, gamma in _DISPERSION_SCENARIOS.items()
        for n in (40, 80, 120)
    ]


class MCStudyConfig(_Strict):
    scenarios: List[MCScenario] = Field(default_factory=reference_grid)
    failure_limit: float = Field(0.05, ge=0, lt=1, description="Scenario aborts above this failure share.")


class GeneratorSpec(_Strict):
    mean: MeanSubmodel
    dispersion: DispersionSubmodel
    parameters: Dict[str, float] = Field(..., description="True values for every parameter.")
    n: int = Field(..., ge=2)
    covariates: Dict[str, CovariateDistribution]
    response: str = "y"
    output: str = "simulated.csv"


####################################
# Run document
####################################

class RunConfig(_Strict):
    """One JSON document drives every command."""
    data: Optional[DataConfig] = None
    mean: Optional[MeanSubmodel] = None
    dispersion: DispersionSubmodel = Field(default_factory=DispersionSubmodel)
    pinned_starts: Dict[str, float] = Field(default_factory=dict)
    fit: FitOptions = Field(default_factory=FitOptions)
    envelope: EnvelopeConfig = Field(default_factory=EnvelopeConfig)
    influence: InfluenceConfig = Field(default_factory=InfluenceConfig)
    mc_study: Optional[MCStudyConfig] = None
    simulate: Optional[GeneratorSpec] = None
    seed: int = Field(20240101, ge=0, description="Root seed; every replicate seed derives from it.")
    out_dir: str = "./results"
