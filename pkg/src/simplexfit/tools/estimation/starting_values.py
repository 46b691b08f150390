"""
Two-step starting values.

Each submodel is first fitted by least squares after linearising the
predictor with pinned values substituted, then corrected by one
Gauss-Newton step on the full nonlinear predictor. Dispersion
pseudo-observations are the unit deviances at the mean start.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence

import numpy as np

from simplexfit.errors import ConfigError, PinnedValueMissingError, SingularDesignError
from simplexfit.model import ModelSpec
from simplexfit.tools.formula import (
    CompiledPredictor,
    ExpressionTree,
    compile_predictor,
    nonlinear_parameters,
    substitute,
)

logger = logging.getLogger(__name__)

# Design matrices with X'X condition number above this get a ridge
COND_LIMIT = 1e12
RIDGE_SCALE = 1e-8
# Pseudo-observations for sigma^2 are floored here so h(sigma^2) stays defined
SIGMA2_FLOOR = 1e-10
# mu used for pseudo-observations is kept this far inside (0, 1)
MU_MARGIN = 1e-12


@dataclass
class StartingValues:
    beta: np.ndarray
    gamma: np.ndarray
    beta_linear: np.ndarray
    gamma_linear: np.ndarray
    notes: List[str] = field(default_factory=list)


def least_squares(X: np.ndarray, r: np.ndarray, notes: List[str], label: str) -> np.ndarray:
    """
    Solve (X'X) theta = X'r, adding a small ridge when X'X is ill-conditioned.

    Raises:
        SingularDesignError: The system stays unsolvable after the ridge
    """
    XtX = X.T @ X
    Xtr = X.T @ r
    k = XtX.shape[0]
    cond = np.linalg.cond(XtX) if np.all(np.isfinite(XtX)) else np.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        ridge = RIDGE_SCALE * max(np.trace(XtX), 1.0) / k
        message = f"{label} design is ill-conditioned (cond {cond:.3g}); added ridge {ridge:.3g}"
        logger.warning(message)
        notes.append(message)
        XtX = XtX + ridge * np.eye(k)
    try:
        theta = np.linalg.solve(XtX, Xtr)
    except np.linalg.LinAlgError as e:
        raise SingularDesignError(f"{label} design is singular: {e}") from e
    if not np.all(np.isfinite(theta)):
        raise SingularDesignError(f"{label} least-squares solution is not finite")
    return theta


def _linear_step(
    tree: ExpressionTree,
    names: Sequence[str],
    pinned_starts: Mapping[str, float],
    columns: Mapping[str, np.ndarray],
    n: int,
    target: np.ndarray,
    notes: List[str],
    label: str,
) -> np.ndarray:
    pinned = {name: float(pinned_starts[name]) for name in names if name in pinned_starts}
    free = [name for name in names if name not in pinned]
    reduced = substitute(tree, pinned)

    nonlinear = nonlinear_parameters(reduced, free)
    if nonlinear:
        raise PinnedValueMissingError(
            f"The {label} predictor is nonlinear in {', '.join(nonlinear)}; "
            f"add pinned_starts for enough of them to make it linear in the rest"
        )

    full = np.array([pinned.get(name, 0.0) for name in names])
    if not free:
        return full
    predictor = compile_predictor(reduced, free)
    at_zero = predictor.evaluate(np.zeros(len(free)), columns, n)
    theta = least_squares(at_zero.jacobian, target - at_zero.value, notes, f"{label} (linear step)")
    full[[names.index(name) for name in free]] = theta
    return full


def _gauss_newton_step(
    predictor: CompiledPredictor,
    start: np.ndarray,
    columns: Mapping[str, np.ndarray],
    n: int,
    target: np.ndarray,
    notes: List[str],
    label: str,
    variant: str,
) -> np.ndarray:
    values = predictor.evaluate(start, columns, n)
    theta = least_squares(values.jacobian, target - values.value, notes, f"{label} (nonlinear step)")
    return theta if variant == "as_printed" else start + theta


def _pseudo_sigma2(spec: ModelSpec, y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    mu = np.clip(spec.mean_link._inverse(eta), MU_MARGIN, 1.0 - MU_MARGIN)
    c = mu * (1.0 - mu)
    dev = (y - mu) ** 2 / (y * (1.0 - y) * c * c)
    return np.maximum(dev, SIGMA2_FLOOR)


def starting_values(spec: ModelSpec, data, variant: str = "derivation") -> StartingValues:
    """
    Two-step starting values for (beta, gamma).

    Args:
        spec: Model specification; pinned_starts fix nonlinear parameters
        data: Dataset
        variant: 'derivation' adds the linear start to the nonlinear
            correction; 'as_printed' uses the correction alone

    Raises:
        PinnedValueMissingError: A submodel stays nonlinear in its free parameters
        SingularDesignError: A linearised design cannot be solved
    """
    if variant not in ("derivation", "as_printed"):
        raise ConfigError(f"Unknown start variant '{variant}'")
    notes: List[str] = []
    columns, n = data.columns, data.n
    target = spec.mean_link.forward(data.y)

    beta_lin = _linear_step(
        spec.mean_formula, list(spec.beta_names), spec.pinned_starts, columns, n, target, notes, "mean"
    )
    mean = spec.mean_predictor
    if mean.is_linear:
        beta0 = beta_lin
    else:
        beta0 = _gauss_newton_step(mean, beta_lin, columns, n, target, notes, "mean", variant)

    sigma2_lin = _pseudo_sigma2(spec, data.y, mean.value(beta_lin, columns, n))
    gamma_lin = _linear_step(
        spec.dispersion_formula,
        list(spec.gamma_names),
        spec.pinned_starts,
        columns,
        n,
        spec.dispersion_link.forward(sigma2_lin),
        notes,
        "dispersion",
    )

    sigma2_nl = _pseudo_sigma2(spec, data.y, mean.value(beta0, columns, n))
    dispersion_target = spec.dispersion_link.forward(sigma2_nl)
    dispersion = spec.dispersion_predictor
    if dispersion.is_linear:
        at_zero = dispersion.evaluate(np.zeros(spec.q), columns, n)
        gamma0 = least_squares(at_zero.jacobian, dispersion_target - at_zero.value, notes, "dispersion")
    else:
        gamma0 = _gauss_newton_step(
            dispersion, gamma_lin, columns, n, dispersion_target, notes, "dispersion", variant
        )

    logger.debug(f"Starting values: beta={beta0.tolist()} gamma={gamma0.tolist()}")
    return StartingValues(beta=beta0, gamma=gamma0, beta_linear=beta_lin, gamma_linear=gamma_lin, notes=notes)


def user_starting_values(spec: ModelSpec, beta_start: Dict[str, float], gamma_start: Dict[str, float]) -> StartingValues:
    missing = [p for p in spec.beta_names if p not in beta_start] + [
        p for p in spec.gamma_names if p not in gamma_start
    ]
    if missing:
        raise ConfigError(f"Starting values missing for: {', '.join(missing)}")
    beta = np.array([float(beta_start[p]) for p in spec.beta_names])
    gamma = np.array([float(gamma_start[p]) for p in spec.gamma_names])
    return StartingValues(beta=beta, gamma=gamma, beta_linear=beta.copy(), gamma_linear=gamma.copy())
