"""
Maximum-likelihood estimation for simplex regression.

Fisher scoring alternates a beta step and a gamma step, each with step
halving. After repeated stalls the fit continues with scipy's BFGS on the
joint parameter vector.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, block_diag, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.stats import norm

from simplexfit.errors import (
    DataError,
    DomainError,
    InvalidStateError,
    NotConvergedError,
    SingularInformationError,
)
from simplexfit.model import DesignState, ModelSpec, assemble
from simplexfit.schemas import FitOptions
from simplexfit.tools.estimation.information import (
    fisher_beta,
    fisher_gamma,
    score,
    score_beta,
    score_gamma,
)
from simplexfit.tools.estimation.starting_values import (
    StartingValues,
    starting_values,
    user_starting_values,
)

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12


@dataclass
class IterationRecord:
    iteration: int
    phase: str
    loglik: float
    max_score: float
    step: float
    halvings: int


@dataclass
class FittedModel:
    spec: ModelSpec
    data: object
    options: FitOptions
    beta_hat: np.ndarray
    gamma_hat: np.ndarray
    cov: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    state: DesignState
    start: StartingValues
    trace: List[IterationRecord] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def theta_hat(self) -> np.ndarray:
        return np.concatenate((self.beta_hat, self.gamma_hat))

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return self.spec.parameter_names

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def max_score(self) -> float:
        return float(np.max(np.abs(score(self.state))))


@dataclass
class InferenceRow:
    name: str
    estimate: float
    se: float
    z: float
    p_value: float


def invert_information(K: np.ndarray, label: str) -> np.ndarray:
    """
    Raises:
        SingularInformationError: K is not finite or too ill-conditioned to invert
    """
    if not np.all(np.isfinite(K)):
        raise SingularInformationError(f"{label} information is not finite")
    cond = np.linalg.cond(K)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularInformationError(f"{label} information is singular (condition number {cond:.3g})")
    return np.linalg.inv(K)


def _slack(state: DesignState) -> float:
    # rounding allowance when comparing log-likelihoods near the optimum
    return 64.0 * np.finfo(float).eps * math.fsum(np.abs(state.loglik_terms))


def _try_state(spec, data, beta, gamma, iteration) -> Optional[DesignState]:
    try:
        return assemble(spec, data, beta, gamma, iteration)
    except (InvalidStateError, DomainError) as e:
        logger.debug(f"Rejected trial point: {e}")
        return None


def _halving_search(
    propose: Callable[[float], Optional[DesignState]],
    current: DesignState,
    max_halvings: int,
    accept: Callable[[DesignState, float], bool],
) -> Tuple[Optional[DesignState], float, int]:
    step = 1.0
    for halvings in range(max_halvings + 1):
        candidate = propose(step)
        if candidate is not None and accept(candidate, step):
            return candidate, step, halvings
        step *= 0.5
    return None, 0.0, max_halvings


class _Fitter:
    def __init__(self, spec: ModelSpec, data, options: FitOptions):
        self.spec = spec
        self.data = data
        self.options = options
        self.trace: List[IterationRecord] = []
        self.notes: List[str] = []

    def record(self, iteration: int, phase: str, state: DesignState, step: float, halvings: int):
        max_score = float(np.max(np.abs(score(state))))
        self.trace.append(IterationRecord(iteration, phase, state.loglik, max_score, step, halvings))
        logger.debug(
            f"iter {iteration:3d} [{phase}] loglik={state.loglik:.10f} max|U|={max_score:.3e} "
            f"step={step:g} halvings={halvings}"
        )

    def _not_worse(self, current: DesignState):
        floor = current.loglik - _slack(current)
        return lambda candidate, step: candidate.loglik >= floor

    def scoring_iteration(self, state: DesignState, iteration: int) -> Tuple[DesignState, bool, float, int]:
        """One beta step then one gamma step. Returns (state, progressed, last step, halvings)."""
        progressed = False
        step_taken, halvings_used = 0.0, 0
        spec, data, limit = self.spec, self.data, self.options.step_halving_max

        direction = invert_information(fisher_beta(state), "Mean") @ score_beta(state)
        new, step, halvings = _halving_search(
            lambda a: _try_state(spec, data, state.beta + a * direction, state.gamma, iteration),
            state,
            limit,
            self._not_worse(state),
        )
        if new is not None:
            state, progressed = new, True
            step_taken, halvings_used = step, halvings

        direction = invert_information(fisher_gamma(state), "Dispersion") @ score_gamma(state)
        new, step, halvings = _halving_search(
            lambda a: _try_state(spec, data, state.beta, state.gamma + a * direction, iteration),
            state,
            limit,
            self._not_worse(state),
        )
        if new is not None:
            state, progressed = new, True
            step_taken, halvings_used = step, max(halvings_used, halvings)
        return state, progressed, step_taken, halvings_used

    def quasi_newton(self, state: DesignState, first_iteration: int) -> Tuple[DesignState, int]:
        """
        BFGS (scipy) on the log-likelihood in coordinates whitened by the
        Fisher information at the entry point; restarts once if the line
        search gives up before the score tolerance is met.
        """
        opts = self.options
        iteration = first_iteration
        for _ in range(2):
            if np.max(np.abs(score(state))) <= opts.grad_tolerance or iteration >= opts.max_iterations:
                break
            state, iteration, result = self._bfgs_run(state, iteration)
            if result.success:
                break
            logger.info(f"Quasi-Newton stopped early: {result.message}")
            self.notes.append(f"quasi-Newton stopped at iteration {iteration}: {result.message}")
        return state, iteration

    def _bfgs_run(self, state: DesignState, iteration: int):
        k = self.spec.k
        opts = self.options
        theta0 = np.concatenate((state.beta, state.gamma))
        try:
            root = cholesky(block_diag(fisher_beta(state), fisher_gamma(state)), lower=True)
        except LinAlgError:
            root = np.eye(theta0.size) * math.sqrt(max(1.0, abs(state.loglik)))

        evaluated = {}
        counter = {"iteration": iteration}

        def to_theta(phi):
            return theta0 + solve_triangular(root, phi, lower=True, trans="T")

        def state_at(phi):
            key = phi.tobytes()
            if key not in evaluated:
                theta = to_theta(phi)
                evaluated[key] = _try_state(self.spec, self.data, theta[:k], theta[k:], counter["iteration"])
            return evaluated[key]

        def objective(phi):
            current = state_at(phi)
            if current is None:
                return np.inf, np.zeros_like(phi)
            return -current.loglik, -solve_triangular(root, score(current), lower=True)

        def accepted(phi):
            counter["iteration"] += 1
            current = state_at(phi)
            evaluated.clear()
            if current is not None:
                evaluated[phi.tobytes()] = current
                self.record(counter["iteration"], "quasi_newton", current, float("nan"), 0)

        # |score| <= ||root||_inf |whitened gradient|
        gtol = opts.grad_tolerance / float(np.abs(root).sum(axis=1).max())
        result = minimize(
            objective,
            np.zeros_like(theta0),
            jac=True,
            method="BFGS",
            callback=accepted,
            options={"gtol": gtol, "maxiter": opts.max_iterations - iteration},
        )
        final = state_at(result.x)
        if final is not None and final.loglik >= state.loglik:
            state = final
        return state, counter["iteration"], result

    def run(self, start: StartingValues) -> Tuple[DesignState, int]:
        opts = self.options
        state = assemble(self.spec, self.data, start.beta, start.gamma, iteration=0)
        self.record(0, "start", state, 0.0, 0)

        if opts.algorithm == "quasi_newton":
            return self.quasi_newton(state, 0)

        stalls = 0
        iteration = 0
        while np.max(np.abs(score(state))) > opts.grad_tolerance and iteration < opts.max_iterations:
            iteration += 1
            state, progressed, step, halvings = self.scoring_iteration(state, iteration)
            self.record(iteration, "scoring", state, step, halvings)
            stalls = 0 if progressed else stalls + 1
            if stalls >= opts.stall_limit:
                if opts.algorithm == "fisher_scoring":
                    self.notes.append(f"Fisher scoring stalled {stalls} times at iteration {iteration}")
                    break
                message = f"Fisher scoring stalled {stalls} times; switching to quasi-Newton at iteration {iteration}"
                logger.info(message)
                self.notes.append(message)
                return self.quasi_newton(state, iteration)
        return state, iteration


def fit(spec: ModelSpec, data, options: Optional[FitOptions] = None) -> FittedModel:
    """
    Maximum-likelihood fit of a simplex regression model.

    Args:
        spec: Model specification
        data: Dataset
        options: Iteration controls and starting-value mode

    Returns:
        FittedModel; `converged` is False when the score tolerance was not met

    Raises:
        DataError: Fewer observations than parameters plus one
        PinnedValueMissingError, SingularDesignError: From starting values
        InvalidStateError: The starting point is invalid
        SingularInformationError: Information is singular at an iterate
    """
    options = options or FitOptions()
    if data.n <= spec.k + spec.q:
        raise DataError(f"{data.n} observations cannot identify {spec.k + spec.q} parameters")

    if options.starting_mode == "user_supplied":
        start = user_starting_values(spec, options.beta_start, options.gamma_start)
    else:
        start = starting_values(spec, data, options.start_variant)

    fitter = _Fitter(spec, data, options)
    fitter.notes.extend(start.notes)
    state, iterations = fitter.run(start)

    max_score = float(np.max(np.abs(score(state))))
    converged = max_score <= options.grad_tolerance
    if not converged:
        logger.warning(f"Fit did not converge after {iterations} iterations (max|U| = {max_score:.3e})")

    cov = block_diag(
        invert_information(fisher_beta(state), "Mean"),
        invert_information(fisher_gamma(state), "Dispersion"),
    )
    return FittedModel(
        spec=spec,
        data=data,
        options=options,
        beta_hat=state.beta.copy(),
        gamma_hat=state.gamma.copy(),
        cov=cov,
        loglik=state.loglik,
        converged=converged,
        iterations=iterations,
        state=state,
        start=start,
        trace=fitter.trace,
        notes=fitter.notes,
    )


def require_converged(fitted: FittedModel, operation: str) -> None:
    if not fitted.converged:
        raise NotConvergedError(
            f"{operation} needs a converged fit (stopped after {fitted.iterations} iterations, "
            f"max|U| = {fitted.max_score:.3e})"
        )


def inference_table(fitted: FittedModel) -> List[InferenceRow]:
    """
    Wald table: estimate, standard error, z and two-sided normal p-value.

    Raises:
        NotConvergedError: The fit did not converge
    """
    require_converged(fitted, "Inference")
    rows = []
    for name, estimate, se in zip(fitted.parameter_names, fitted.theta_hat, fitted.se):
        z = float(estimate / se)
        rows.append(InferenceRow(name, float(estimate), float(se), z, float(2.0 * norm.sf(abs(z)))))
    return rows
