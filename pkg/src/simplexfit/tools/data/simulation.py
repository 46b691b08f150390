"""
Synthetic datasets and the Monte Carlo study of residual distributions.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np
from scipy import stats

from simplexfit.errors import ConfigError, NumericalError, ReplicateFailureError
from simplexfit.model import ModelSpec, mean_and_dispersion
from simplexfit.schemas import CovariateDistribution, FitOptions, GeneratorSpec, MCScenario, MCStudyConfig
from simplexfit.tools.data.datasets import Dataset
from simplexfit.tools.diagnostics.envelope import map_replicates, replicate_uniforms
from simplexfit.tools.diagnostics.residuals import residuals_from_state
from simplexfit.tools.distribution import simulate_responses
from simplexfit.tools.estimation.fitting import fit
from simplexfit.tools.formula import nonlinear_parameters

logger = logging.getLogger(__name__)


####################################
# Covariates and responses
####################################

def draw_covariate(dist: CovariateDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    if dist.distribution == "uniform":
        return rng.uniform(dist.low, dist.high, n)
    if dist.distribution == "normal":
        return rng.normal(dist.mean, dist.sd, n)
    if dist.distribution == "choice":
        return rng.choice(np.asarray(dist.values, dtype=float), n)
    values = rng.uniform(dist.low, dist.high, n)
    values[rng.random(n) < dist.zero_fraction] = 0.0
    return values


def draw_covariates(
    distributions: Mapping[str, CovariateDistribution], n: int, rng: np.random.Generator
) -> Dict[str, np.ndarray]:
    """Columns drawn in name order so results do not depend on mapping order."""
    return {name: draw_covariate(distributions[name], n, rng) for name in sorted(distributions)}


def _parameter_vectors(spec: ModelSpec, values: Mapping[str, float]):
    missing = [p for p in spec.parameter_names if p not in values]
    if missing:
        raise ConfigError(f"True values missing for: {', '.join(missing)}")
    beta = np.array([float(values[p]) for p in spec.beta_names])
    gamma = np.array([float(values[p]) for p in spec.gamma_names])
    return beta, gamma


def _check_covariates(spec: ModelSpec, columns: Mapping[str, np.ndarray]) -> None:
    missing = [c for c in spec.covariates if c not in columns]
    if missing:
        raise ConfigError(f"No distribution given for covariates: {', '.join(missing)}")


def simulate_dataset(gen: GeneratorSpec, seed: int) -> Dataset:
    """
    Draw covariates, then responses at the true parameters.

    Raises:
        ConfigError: Missing true values or covariate distributions
        InvalidStateError: The true parameters give mu or sigma^2 out of range
    """
    spec = ModelSpec.from_formulas(
        mean=gen.mean.formula,
        dispersion=gen.dispersion.formula,
        mean_link=gen.mean.link,
        dispersion_link=gen.dispersion.link,
        beta_names=gen.mean.parameters,
        gamma_names=gen.dispersion.parameters,
        mean_prefix=gen.mean.parameter_prefix,
        dispersion_prefix=gen.dispersion.parameter_prefix,
    )
    if gen.response in gen.covariates:
        raise ConfigError(f"Response name '{gen.response}' is also a covariate")
    beta, gamma = _parameter_vectors(spec, gen.parameters)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    columns = draw_covariates(gen.covariates, gen.n, rng)
    _check_covariates(spec, columns)
    _, _, mu, sigma2 = mean_and_dispersion(spec, columns, gen.n, beta, gamma)
    y = simulate_responses(mu, sigma2, replicate_uniforms(seed, 1, gen.n, 1))[0]
    return Dataset.from_arrays({gen.response: y, **columns}, gen.response)


####################################
# Monte Carlo study
####################################

@dataclass
class ScenarioResult:
    name: str
    n: int
    replications: int
    failures: int
    lambda_ratio: float
    mu_range: tuple
    fitted_mu_range: tuple
    expected_normal: np.ndarray
    mean_order_statistics: np.ndarray
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    omega_lo: float
    omega_hi: float


def blom_scores(n: int) -> np.ndarray:
    """Expected standard normal order statistics, Blom approximation."""
    return stats.norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))


def scenario_spec(scenario: MCScenario) -> ModelSpec:
    spec = ModelSpec.from_formulas(
        mean=scenario.mean_formula,
        dispersion=scenario.dispersion_formula,
        mean_link=scenario.mean_link,
        dispersion_link=scenario.dispersion_link,
    )
    if len(scenario.beta) != spec.k or len(scenario.gamma) != spec.q:
        raise ConfigError(
            f"Scenario '{scenario.name}' gives {len(scenario.beta)}+{len(scenario.gamma)} values for "
            f"{spec.k}+{spec.q} parameters"
        )
    truth = dict(zip(spec.beta_names, scenario.beta)) | dict(zip(spec.gamma_names, scenario.gamma))
    pinned = scenario.pinned
    if pinned is None:
        nonlinear = nonlinear_parameters(spec.mean_formula, spec.beta_names) + nonlinear_parameters(
            spec.dispersion_formula, spec.gamma_names
        )
        pinned = {name: truth[name] for name in nonlinear}
    return ModelSpec(
        mean_formula=spec.mean_formula,
        dispersion_formula=spec.dispersion_formula,
        mean_link=spec.mean_link,
        dispersion_link=spec.dispersion_link,
        beta_names=spec.beta_names,
        gamma_names=spec.gamma_names,
        pinned_starts=pinned,
    )


def run_scenario(
    scenario: MCScenario,
    seed: int,
    index: int = 0,
    workers: int = 1,
    failure_limit: float = 0.05,
    options: Optional[FitOptions] = None,
    progress: Optional[Callable[[int], None]] = None,
) -> ScenarioResult:
    """
    Simulate, fit and collect ordered r_beta residuals for one scenario.

    Covariates are drawn once from SeedSequence([seed]) for base_n rows and
    tiled up to n, so scenarios with the same base_n share their design.
    Replicate j of scenario `index` draws from SeedSequence([seed, index + 1, j]).

    Raises:
        ReplicateFailureError: The share of failed replicates exceeds failure_limit
    """
    spec = scenario_spec(scenario)
    options = options or FitOptions()
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    base = draw_covariates(scenario.covariates, scenario.base_n, rng)
    _check_covariates(spec, base)
    reps = scenario.n // scenario.base_n
    columns = {name: np.tile(values, reps) for name, values in base.items()}
    n = scenario.n

    beta, gamma = np.asarray(scenario.beta, dtype=float), np.asarray(scenario.gamma, dtype=float)
    _, _, mu, sigma2 = mean_and_dispersion(spec, columns, n, beta, gamma)
    uniforms = replicate_uniforms(seed, scenario.replications, n, index + 1)
    responses = simulate_responses(mu, sigma2, uniforms)

    def replicate(j: int):
        try:
            data = Dataset.from_arrays({"y": responses[j], **columns}, "y")
            fitted = fit(spec, data, options)
            if not fitted.converged:
                return None
            report = residuals_from_state(fitted.state)
            return np.sort(report.r_beta), float(fitted.state.mu.min()), float(fitted.state.mu.max())
        except NumericalError as e:
            logger.debug(f"{scenario.name} replicate {j} failed: {e}")
            return None
        finally:
            if progress is not None:
                progress(j)

    results = [r for r in map_replicates(replicate, scenario.replications, workers) if r is not None]
    failures = scenario.replications - len(results)
    if failures > failure_limit * scenario.replications:
        raise ReplicateFailureError(
            f"Scenario '{scenario.name}': {failures} of {scenario.replications} replicates failed"
        )
    if not results:
        raise ReplicateFailureError(f"Scenario '{scenario.name}': no replicate succeeded")

    ordered = np.vstack([r[0] for r in results])
    pooled = ordered.ravel()
    omega_lo, omega_hi = np.quantile(pooled, [0.025, 0.975])
    return ScenarioResult(
        name=scenario.name,
        n=n,
        replications=scenario.replications,
        failures=failures,
        lambda_ratio=float(sigma2.max() / sigma2.min()),
        mu_range=(float(mu.min()), float(mu.max())),
        fitted_mu_range=(min(r[1] for r in results), max(r[2] for r in results)),
        expected_normal=blom_scores(n),
        mean_order_statistics=ordered.mean(axis=0),
        mean=float(pooled.mean()),
        variance=float(pooled.var(ddof=1)),
        skewness=float(stats.skew(pooled)),
        kurtosis=float(stats.kurtosis(pooled)),
        omega_lo=float(omega_lo),
        omega_hi=float(omega_hi),
    )


def run_study(
    study: MCStudyConfig,
    seed: int,
    workers: int = 1,
    on_scenario: Optional[Callable[[ScenarioResult], None]] = None,
) -> List[ScenarioResult]:
    results = []
    for index, scenario in enumerate(study.scenarios):
        logger.info(f"Scenario {scenario.name}: n={scenario.n}, {scenario.replications} replications")
        result = run_scenario(scenario, seed, index, workers, study.failure_limit)
        results.append(result)
        if on_scenario is not None:
            on_scenario(result)
    return results
