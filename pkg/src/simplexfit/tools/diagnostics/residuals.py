"""
Standardized weighted residuals from the scoring iteration.

r_beta_t = u_t (y_t - mu_t) / sqrt(v_t (1 - h*_tt)), where h* is the leverage
of the weighted design W^{1/2} X~. The working response z of the final beta
step is reported alongside.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from simplexfit.errors import InvalidStateError
from simplexfit.model import DesignState
from simplexfit.tools.estimation.fitting import FittedModel, require_converged

LEVERAGE_TOL = 1e-10


@dataclass
class ResidualReport:
    r_beta: np.ndarray
    h_star: np.ndarray
    working_response: np.ndarray
    y: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "index": np.arange(1, len(self.y) + 1),
                "y": self.y,
                "mu_hat": self.mu,
                "sigma2_hat": self.sigma2,
                "r_beta": self.r_beta,
                "h_star": self.h_star,
            }
        )


def _weighted_design(state: DesignState) -> np.ndarray:
    return np.sqrt(state.s * state.w)[:, None] * state.X


def hat_matrix(state: DesignState) -> np.ndarray:
    """H* = W^{1/2} X~ (X~' W X~)^{-1} X~' W^{1/2} with W = diag(s w)."""
    Q, _ = np.linalg.qr(_weighted_design(state))
    return Q @ Q.T


def residuals_from_state(state: DesignState) -> ResidualReport:
    """
    Raises:
        InvalidStateError: Some observation has leverage 1 (reported by index)
    """
    Q, _ = np.linalg.qr(_weighted_design(state))
    h_star = np.sum(Q * Q, axis=1)
    room = 1.0 - h_star
    bad = room <= LEVERAGE_TOL
    if np.any(bad):
        t = int(np.flatnonzero(bad)[0])
        raise InvalidStateError(f"leverage h*_tt = {h_star[t]:.12g} leaves no residual", observation=t)

    working = state.X @ state.beta + state.t * state.u * state.residual / state.w
    # sign follows y - mu whatever the direction of the mean link
    r_beta = state.u * state.residual / np.sqrt(state.v * room)
    return ResidualReport(
        r_beta=r_beta,
        h_star=h_star,
        working_response=working,
        y=state.y,
        mu=state.mu,
        sigma2=state.sigma2,
    )


def weighted_residuals(fitted: FittedModel) -> ResidualReport:
    """
    Raises:
        NotConvergedError: The fit did not converge
        InvalidStateError: Some leverage equals 1
    """
    require_converged(fitted, "Residuals")
    return residuals_from_state(fitted.state)


def residual_plot_data(report: ResidualReport, omega: Optional[tuple] = None) -> pd.DataFrame:
    """Residuals against fitted means, flagging those outside (omega_lo, omega_hi)."""
    frame = pd.DataFrame(
        {
            "index": np.arange(1, len(report.r_beta) + 1),
            "mu_hat": report.mu,
            "r_beta": report.r_beta,
        }
    )
    if omega is not None:
        lo, hi = omega
        frame["outside"] = (report.r_beta < lo) | (report.r_beta > hi)
    return frame
