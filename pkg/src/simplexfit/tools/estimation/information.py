"""
Score vector, expected (Fisher) information and observed information.
"""

import numpy as np
from scipy.linalg import block_diag

from simplexfit.model import DesignState


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _bracket(weights: np.ndarray, hessians: np.ndarray) -> np.ndarray:
    """Sum over observations of weights[t] * hessians[t]."""
    return np.einsum("t,tij->ij", weights, hessians)


def score_beta(state: DesignState) -> np.ndarray:
    return state.X.T @ state.b_beta


def score_gamma(state: DesignState) -> np.ndarray:
    return state.Z.T @ state.b_gamma


def score(state: DesignState) -> np.ndarray:
    """Gradient of the log-likelihood in (beta, gamma)."""
    return np.concatenate((score_beta(state), score_gamma(state)))


def fisher_beta(state: DesignState) -> np.ndarray:
    return _sym((state.X.T * (state.s * state.w)) @ state.X)


def fisher_gamma(state: DesignState) -> np.ndarray:
    return _sym((state.Z.T * state.d) @ state.Z)


def fisher_information(state: DesignState) -> np.ndarray:
    """Block-diagonal expected information; the cross block is exactly zero."""
    return block_diag(fisher_beta(state), fisher_gamma(state))


def hessian_blocks(state: DesignState):
    """
    Second derivatives of the log-likelihood.

    Returns:
        (l_bb, l_bg, l_gg), each exactly symmetric where square
    """
    s, X, Z = state.s, state.X, state.Z
    l_bb = -(X.T * (s * state.q)) @ X + _bracket(state.b_beta, state.X_beta)
    l_bg = -(X.T * (s * s * state.h * state.t * state.u * state.residual)) @ Z
    l_gg = -(Z.T * state.nu) @ Z + _bracket(state.b_gamma, state.Z_gamma)
    return _sym(l_bb), l_bg, _sym(l_gg)


def hessian(state: DesignState) -> np.ndarray:
    l_bb, l_bg, l_gg = hessian_blocks(state)
    return np.block([[l_bb, l_bg], [l_bg.T, l_gg]])


def observed_information(state: DesignState) -> np.ndarray:
    """Negative Hessian of the log-likelihood; exactly symmetric."""
    return -hessian(state)
