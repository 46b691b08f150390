"""
Simulated envelopes for ordered residuals.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from simplexfit.errors import ConfigError, NumericalError, ReplicateFailureError
from simplexfit.model import assemble
from simplexfit.tools.diagnostics.residuals import residuals_from_state, weighted_residuals
from simplexfit.tools.distribution import simulate_responses
from simplexfit.tools.estimation.fitting import FittedModel, fit, require_converged

logger = logging.getLogger(__name__)

MIN_REPLICATES = 19
MAX_SKIP_SHARE = 0.10


@dataclass
class EnvelopeBands:
    observed: np.ndarray
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray
    omega_lo: float
    omega_hi: float
    n_replicates: int
    skipped: int
    seed: int
    refit: bool

    @property
    def omega(self) -> tuple:
        return (self.omega_lo, self.omega_hi)

    @property
    def outside(self) -> np.ndarray:
        """Ordered positions whose observed residual leaves the band."""
        return np.flatnonzero((self.observed < self.lower) | (self.observed > self.upper))


def replicate_uniforms(seed: int, n_replicates: int, n: int, *stream: int) -> np.ndarray:
    """Row j draws from SeedSequence([seed, *stream, j]) so replicates are independent of scheduling."""
    return np.vstack(
        [np.random.default_rng(np.random.SeedSequence([seed, *stream, j])).random(n) for j in range(n_replicates)]
    )


def map_replicates(task: Callable[[int], object], count: int, workers: int = 1) -> List[object]:
    """Run task(j) for j in range(count); results keep replicate order."""
    if workers <= 1:
        return [task(j) for j in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(count)))


def simulated_envelope(
    fitted: FittedModel,
    n_replicates: int = 100,
    seed: int = 0,
    refit: bool = True,
    workers: int = 1,
    progress: Optional[Callable[[int], None]] = None,
) -> EnvelopeBands:
    """
    Envelope of ordered r_beta residuals under responses simulated at the fit.

    Args:
        fitted: Converged fit
        n_replicates: Simulated response vectors (at least 19)
        seed: Root seed; replicate j uses SeedSequence([seed, j])
        refit: Refit each replicate; otherwise residuals are taken at the fitted parameters
        workers: Threads running replicates
        progress: Called with the replicate index as each one finishes

    Raises:
        NotConvergedError: The fit did not converge
        ReplicateFailureError: More than 10% of replicates failed
    """
    require_converged(fitted, "Envelope")
    if n_replicates < MIN_REPLICATES:
        raise ConfigError(f"Envelopes need at least {MIN_REPLICATES} replicates, got {n_replicates}")

    observed = np.sort(weighted_residuals(fitted).r_beta)
    state = fitted.state
    responses = simulate_responses(state.mu, state.sigma2, replicate_uniforms(seed, n_replicates, state.n))

    def replicate(j: int) -> Optional[np.ndarray]:
        try:
            data = fitted.data.with_response(responses[j])
            if refit:
                refitted = fit(fitted.spec, data, fitted.options)
                if not refitted.converged:
                    logger.debug(f"Envelope replicate {j} did not converge")
                    return None
                rep_state = refitted.state
            else:
                rep_state = assemble(fitted.spec, data, fitted.beta_hat, fitted.gamma_hat)
            return np.sort(residuals_from_state(rep_state).r_beta)
        except NumericalError as e:
            logger.debug(f"Envelope replicate {j} failed: {e}")
            return None
        finally:
            if progress is not None:
                progress(j)

    results = map_replicates(replicate, n_replicates, workers)
    kept = [r for r in results if r is not None]
    skipped = n_replicates - len(kept)
    if skipped > MAX_SKIP_SHARE * n_replicates:
        raise ReplicateFailureError(f"{skipped} of {n_replicates} envelope replicates failed")
    if skipped:
        logger.warning(f"Skipped {skipped} of {n_replicates} envelope replicates")

    R = np.vstack(kept)
    omega_lo, omega_hi = np.quantile(R.ravel(), [0.025, 0.975])
    return EnvelopeBands(
        observed=observed,
        lower=R.min(axis=0),
        median=np.median(R, axis=0),
        upper=R.max(axis=0),
        omega_lo=float(omega_lo),
        omega_hi=float(omega_hi),
        n_replicates=n_replicates,
        skipped=skipped,
        seed=seed,
        refit=refit,
    )

