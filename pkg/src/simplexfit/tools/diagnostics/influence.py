"""
Local influence under case-weight, response and covariate perturbation.

For a perturbation scheme with derivative matrix Delta (p x n) the normal
curvature in a unit direction l is C_l = 2 |l' Delta' A Delta l|, with A the
inverse Hessian (or, for a subset of parameters, the inverse Hessian minus
the inverse of the complementary block).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import block_diag, eigh, solve

from simplexfit.errors import ConfigError, DataError, SingularInformationError
from simplexfit.model import DesignState
from simplexfit.tools.estimation.fitting import FittedModel, require_converged
from simplexfit.tools.estimation.information import hessian

logger = logging.getLogger(__name__)

SCHEMES = ("case_weights", "response", "covariate")
SUBSETS = ("theta", "beta", "gamma")
SUBSET_ALIASES = {"beta_only": "beta", "gamma_only": "gamma"}
COND_LIMIT = 1e12
EIGH_MAX_N = 2000


@dataclass
class InfluenceReport:
    scheme: str
    subset: str
    c_max: float
    i_max: np.ndarray
    c_t: np.ndarray
    threshold: float
    flagged: np.ndarray
    delta: np.ndarray
    curvature: Optional[np.ndarray] = None

    def normal_curvature(self, direction: np.ndarray) -> float:
        """Curvature 2 |l' B l| along a (not necessarily unit) direction."""
        if self.curvature is None:
            raise ValueError("curvature matrix was not kept for this report")
        direction = np.asarray(direction, dtype=float)
        return float(2.0 * abs(direction @ self.curvature @ direction) / (direction @ direction))


####################################
# Perturbation matrices
####################################

def _case_weights(state: DesignState) -> np.ndarray:
    return np.vstack((state.X.T * state.b_beta, state.Z.T * state.b_gamma))


def _response(state: DesignState) -> np.ndarray:
    scale = np.sqrt((state.mu * (1.0 - state.mu)) ** 3)
    return np.vstack(
        (
            state.X.T * (state.s * state.t * state.m * scale),
            state.Z.T * (state.s * state.h * state.b * scale),
        )
    )


def _covariate_scale(fitted: FittedModel, name: str) -> float:
    columns = fitted.data.columns
    if name not in columns:
        raise ConfigError(f"Perturbed covariate '{name}' is not a data column")
    sd = float(np.std(columns[name], ddof=1))
    if not sd > 0.0:
        raise DataError(f"Perturbed covariate '{name}' has zero variance")
    return sd


def _covariate(fitted: FittedModel, mean: Optional[str], dispersion: Optional[str]) -> np.ndarray:
    spec, state = fitted.spec, fitted.state
    if mean is None and dispersion is None:
        raise ConfigError("Covariate perturbation needs a mean or dispersion covariate")
    referenced = (mean is not None and mean in spec.mean_formula.covariates) or (
        dispersion is not None and dispersion in spec.dispersion_formula.covariates
    )
    if not referenced:
        raise ConfigError(f"Neither submodel references the perturbed covariate ({mean}, {dispersion})")

    n, columns = state.n, fitted.data.columns
    x_delta, x_mixed = np.zeros(n), np.zeros((n, spec.k))
    z_delta, z_mixed = np.zeros(n), np.zeros((n, spec.q))
    if mean is not None:
        sd = _covariate_scale(fitted, mean)
        d_cov, mixed = spec.mean_predictor.covariate_derivatives(fitted.beta_hat, columns, n, mean)
        x_delta, x_mixed = sd * d_cov, sd * mixed
    if dispersion is not None:
        sd = _covariate_scale(fitted, dispersion)
        d_cov, mixed = spec.dispersion_predictor.covariate_derivatives(fitted.gamma_hat, columns, n, dispersion)
        z_delta, z_mixed = sd * d_cov, sd * mixed

    cross = state.s * state.s * state.t * state.h * state.u * state.residual
    delta_beta = (
        -state.X.T * (cross * z_delta)
        - state.X.T * (state.s * state.q * x_delta)
        + (state.b_beta[:, None] * x_mixed).T
    )
    delta_gamma = (
        -state.Z.T * (cross * x_delta)
        - state.Z.T * (state.nu * z_delta)
        + (state.b_gamma[:, None] * z_mixed).T
    )
    return np.vstack((delta_beta, delta_gamma))


def perturbation_matrix(
    fitted: FittedModel,
    scheme: str,
    mean_covariate: Optional[str] = None,
    dispersion_covariate: Optional[str] = None,
) -> np.ndarray:
    """Delta with one row per parameter (beta then gamma) and one column per observation."""
    if scheme == "case_weights":
        return _case_weights(fitted.state)
    if scheme == "response":
        return _response(fitted.state)
    if scheme == "covariate":
        return _covariate(fitted, mean_covariate, dispersion_covariate)
    raise ConfigError(f"Unknown perturbation scheme '{scheme}' (choose from {', '.join(SCHEMES)})")


####################################
# Curvature
####################################

def _inverse(L: np.ndarray, label: str) -> np.ndarray:
    if not np.all(np.isfinite(L)):
        raise SingularInformationError(f"{label} Hessian is not finite")
    cond = np.linalg.cond(L)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularInformationError(f"{label} Hessian is singular (condition number {cond:.3g})")
    return solve(L, np.eye(L.shape[0]), assume_a="sym")


def curvature_core(L: np.ndarray, k: int, subset: str) -> np.ndarray:
    """Inverse Hessian, less the inverse of the complementary block for a subset."""
    subset = SUBSET_ALIASES.get(subset, subset)
    core = _inverse(L, "Full")
    if subset == "theta":
        return core
    p = L.shape[0]
    if subset == "beta":
        return core - block_diag(np.zeros((k, k)), _inverse(L[k:, k:], "Dispersion"))
    if subset == "gamma":
        return core - block_diag(_inverse(L[:k, :k], "Mean"), np.zeros((p - k, p - k)))
    raise ConfigError(f"Unknown parameter subset '{subset}' (choose from {', '.join(SUBSETS)})")


def _power_iteration(matvec, n: int, iters: int = 2000, tol: float = 1e-12) -> Tuple[float, np.ndarray]:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    value = 0.0
    for _ in range(iters):
        w = matvec(v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v
        w /= norm
        new_value = float(w @ matvec(w))
        if abs(new_value - value) <= tol * max(1.0, abs(new_value)):
            return new_value, w
        v, value = w, new_value
    return value, v


def influence(
    fitted: FittedModel,
    scheme: str = "case_weights",
    subset: str = "theta",
    mean_covariate: Optional[str] = None,
    dispersion_covariate: Optional[str] = None,
    keep_matrix: bool = True,
) -> InfluenceReport:
    """
    Maximum-curvature direction and per-case curvatures for one scheme and subset.

    Returns:
        InfluenceReport with i_max normalised so its largest-magnitude entry
        is positive and flagged cases (0-based) where C_t > 2 mean(C_t)

    Raises:
        NotConvergedError: The fit did not converge
        SingularInformationError: The Hessian or a sub-block cannot be inverted
    """
    require_converged(fitted, "Influence")
    subset = SUBSET_ALIASES.get(subset, subset)
    delta = perturbation_matrix(fitted, scheme, mean_covariate, dispersion_covariate)
    L = hessian(fitted.state)
    core = curvature_core(L, fitted.spec.k, subset)
    n = delta.shape[1]

    c_t = 2.0 * np.abs(np.einsum("it,ij,jt->t", delta, core, delta))

    B = None
    if n <= EIGH_MAX_N or keep_matrix:
        B = -(delta.T @ core @ delta)
        B = 0.5 * (B + B.T)
    if n <= EIGH_MAX_N:
        values, vectors = eigh(B)
        top, direction = values[-1], vectors[:, -1]
    else:
        top, direction = _power_iteration(lambda v: -(delta.T @ (core @ (delta @ v))), n)

    direction = direction / np.linalg.norm(direction)
    if direction[np.argmax(np.abs(direction))] < 0.0:
        direction = -direction

    threshold = 2.0 * float(np.mean(c_t))
    flagged = np.flatnonzero(c_t > threshold)
    if flagged.size:
        logger.info(f"{scheme}/{subset}: cases {', '.join(str(i + 1) for i in flagged)} exceed {threshold:.4g}")
    return InfluenceReport(
        scheme=scheme,
        subset=subset,
        c_max=float(2.0 * top),
        i_max=direction,
        c_t=c_t,
        threshold=threshold,
        flagged=flagged,
        delta=delta,
        curvature=B if keep_matrix else None,
    )


def influence_all(
    fitted: FittedModel,
    scheme: str = "case_weights",
    mean_covariate: Optional[str] = None,
    dispersion_covariate: Optional[str] = None,
) -> Dict[str, InfluenceReport]:
    return {
        subset: influence(fitted, scheme, subset, mean_covariate, dispersion_covariate)
        for subset in SUBSETS
    }
