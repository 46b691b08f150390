from simplexfit.tools.distribution.simplex import (
    SimplexParams,
    SimplexSampler,
    cdf,
    deviance,
    gamma_half_upper_scaled,
    log_density,
    logpdf,
    response_variance,
    sample,
    simulate_responses,
)

__all__ = [
    "SimplexParams",
    "SimplexSampler",
    "cdf",
    "deviance",
    "gamma_half_upper_scaled",
    "log_density",
    "logpdf",
    "response_variance",
    "sample",
    "simulate_responses",
]
