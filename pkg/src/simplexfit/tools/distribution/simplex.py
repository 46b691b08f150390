"""
The simplex distribution on (0, 1): unit deviance, density, variance,
distribution function and inverse-CDF sampling.
"""

import logging
from typing import Dict, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.interpolate import PchipInterpolator
from scipy.special import erfcx, expit, log_expit, logit

from simplexfit.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_LOG_2PI = np.log(2.0 * np.pi)

# Integration range in logit coordinates; expit(-36) is below 3e-16
_S_MIN, _S_MAX = -36.0, 36.0
_GL16 = np.polynomial.legendre.leggauss(16)
_GL32 = np.polynomial.legendre.leggauss(32)

# Smallest probability step kept in the quantile interpolant
KNOT_GAP = 1e-12


class SimplexParams(BaseModel):
    """Mean in (0, 1) and dispersion sigma^2 > 0."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    mu: float = Field(..., gt=0.0, lt=1.0, description="Mean of the response.")
    sigma2: float = Field(..., gt=0.0, description="Dispersion parameter sigma^2.")


def _unit(name: str, x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    bad = ~(np.isfinite(arr) & (arr > 0.0) & (arr < 1.0))
    if np.any(bad):
        raise DomainError(f"{name} must lie strictly inside (0, 1)")
    return arr


def _positive(name: str, x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~(np.isfinite(arr) & (arr > 0.0))):
        raise DomainError(f"{name} must be positive and finite")
    return arr


def _out(arr: np.ndarray) -> ArrayLike:
    return arr.item() if np.ndim(arr) == 0 else arr


####################################
# Density
####################################

def deviance(y: ArrayLike, mu: ArrayLike) -> ArrayLike:
    """
    Unit deviance d(y; mu) = (y - mu)^2 / (y (1 - y) mu^2 (1 - mu)^2).

    Raises:
        DomainError: If y or mu is outside (0, 1)
    """
    y = _unit("y", y)
    mu = _unit("mu", mu)
    c = mu * (1.0 - mu)
    return _out((y - mu) ** 2 / (y * (1.0 - y) * c * c))


def logpdf(y: ArrayLike, mu: ArrayLike, sigma2: ArrayLike) -> ArrayLike:
    """Element-wise log density; arguments broadcast."""
    y = _unit("y", y)
    mu = _unit("mu", mu)
    sigma2 = _positive("sigma2", sigma2)
    d = deviance(y, mu)
    return _out(-0.5 * _LOG_2PI - 0.5 * np.log(sigma2) - 1.5 * np.log(y * (1.0 - y)) - d / (2.0 * sigma2))


def log_density(y: ArrayLike, p: SimplexParams) -> ArrayLike:
    return logpdf(y, p.mu, p.sigma2)


####################################
# Moments
####################################

def gamma_half_upper_scaled(x: ArrayLike) -> ArrayLike:
    """
    Scaled upper incomplete gamma exp(x) * Gamma(1/2, x) = sqrt(pi) * erfcx(sqrt(x)).

    Finite for every x >= 0, equal to sqrt(pi) at 0 and strictly decreasing.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0):
        raise DomainError("gamma_half_upper_scaled needs finite x >= 0")
    return _out(np.sqrt(np.pi) * erfcx(np.sqrt(x)))


def response_variance(p: SimplexParams) -> float:
    """
    Var(y) = c - c sqrt(x) G(x), with c = mu (1 - mu) and x = 1 / (2 sigma^2 c^2).

    For large x the asymptotic series of sqrt(x) G(x) replaces the
    subtraction, which would otherwise cancel to zero.
    """
    c = p.mu * (1.0 - p.mu)
    x = 1.0 / (2.0 * p.sigma2 * c * c)
    if x > 1e4:
        r = 1.0 / x
        return c * r * (0.5 - 0.75 * r + 1.875 * r * r - 6.5625 * r ** 3)
    return c - c * np.sqrt(x) * gamma_half_upper_scaled(x)


####################################
# Distribution function and sampling
####################################

class SimplexSampler:
    """
    Tabulated distribution function for one (mu, sigma^2).

    The density is integrated in logit coordinates over cells refined until
    16- and 32-point Gauss-Legendre masses agree; quantiles start from a
    monotone interpolant of the table and finish by bisection within the cell.
    """

    def __init__(self, params: SimplexParams, tol: float = 1e-14, max_rounds: int = 8):
        self.params = params
        self.tol = tol
        self.edges, masses = self._build(max_rounds)
        self.total = float(masses.sum())
        if abs(self.total - 1.0) > 1e-6:
            logger.warning(
                f"Simplex mass on the grid is {self.total:.8f} for mu={params.mu}, sigma2={params.sigma2}"
            )
        self.cum = np.concatenate(([0.0], np.cumsum(masses))) / self.total
        # tail cells carry subnormal mass; knots closer than KNOT_GAP give the
        # interpolant infinite slopes
        keep = np.concatenate(([True], np.diff(self.cum) > KNOT_GAP))
        self._guess = PchipInterpolator(self.cum[keep], self.edges[keep]) if keep.sum() >= 2 else None

    def _integrand(self, s: np.ndarray) -> np.ndarray:
        # density of y times dy/ds = y (1 - y)
        mu, sigma2 = self.params.mu, self.params.sigma2
        log_y, log_1my = log_expit(s), log_expit(-s)
        y = expit(s)
        y1y = np.exp(log_y + log_1my)
        c = mu * (1.0 - mu)
        d = (y - mu) ** 2 / (y1y * c * c)
        return np.exp(-0.5 * _LOG_2PI - 0.5 * np.log(sigma2) - 0.5 * (log_y + log_1my) - d / (2.0 * sigma2))

    def _mass(self, a: np.ndarray, b: np.ndarray, rule=_GL32) -> np.ndarray:
        nodes, weights = rule
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        s = mid[:, None] + half[:, None] * nodes[None, :]
        return half * (self._integrand(s) @ weights)

    def _build(self, max_rounds: int) -> Tuple[np.ndarray, np.ndarray]:
        mu, sigma2 = self.params.mu, self.params.sigma2
        sd = min(0.5, np.sqrt(sigma2) * (mu * (1.0 - mu)) ** 1.5)
        local = np.clip(mu + sd * np.linspace(-12.0, 12.0, 97), 1e-15, 1.0 - 1e-15)
        edges = np.unique(np.concatenate((np.linspace(_S_MIN, _S_MAX, 289), logit(local))))
        edges = edges[(edges >= _S_MIN) & (edges <= _S_MAX)]

        for _ in range(max_rounds):
            a, b = edges[:-1], edges[1:]
            coarse = self._mass(a, b, _GL16)
            fine = self._mass(a, b, _GL32)
            split = np.abs(coarse - fine) > self.tol
            if not np.any(split):
                return edges, fine
            edges = np.sort(np.concatenate((edges, 0.5 * (a[split] + b[split]))))
        return edges, self._mass(edges[:-1], edges[1:])

    def _cell(self, s: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.edges, s, side="right") - 1, 0, len(self.edges) - 2)

    def cdf(self, y: ArrayLike) -> ArrayLike:
        y = _unit("y", y)
        s = np.atleast_1d(np.clip(logit(y), _S_MIN, _S_MAX)).astype(float)
        i = self._cell(s)
        partial = self._mass(self.edges[i], s) / self.total
        return _out(np.clip(self.cum[i] + partial, 0.0, 1.0).reshape(np.shape(y)))

    def ppf(self, u: ArrayLike) -> ArrayLike:
        """Quantiles for u in [0, 1); results lie strictly inside (0, 1)."""
        u = np.asarray(u, dtype=float)
        if np.any(~np.isfinite(u)) or np.any(u < 0.0) or np.any(u > 1.0):
            raise DomainError("ppf needs probabilities in [0, 1]")
        flat = np.atleast_1d(u).ravel()
        i = np.clip(np.searchsorted(self.cum, flat, side="right") - 1, 0, len(self.edges) - 2)
        lo, hi = self.edges[i].copy(), self.edges[i + 1].copy()
        target = (flat - self.cum[i]) * self.total

        if self._guess is not None:
            guess = np.clip(self._guess(flat), lo, hi)
            below = self._mass(lo, guess) < target
            lo = np.where(below, guess, lo)
            hi = np.where(below, hi, guess)
        left = self.edges[i]

        # 4e-12 in logit units is below 1e-12 in y
        while np.max(hi - lo) > 4e-12:
            mid = 0.5 * (lo + hi)
            below = self._mass(left, mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)

        y = np.clip(expit(0.5 * (lo + hi)), np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        return _out(y.reshape(np.shape(u)))


def cdf(y: ArrayLike, p: SimplexParams) -> ArrayLike:
    return SimplexSampler(p).cdf(y)


def sample(p: SimplexParams, n: int, seed: Optional[int] = None) -> np.ndarray:
    """
    Draw n independent responses by inverse-CDF sampling.

    Raises:
        DomainError: If n < 1
    """
    if n < 1:
        raise DomainError(f"sample size must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    return np.atleast_1d(SimplexSampler(p).ppf(rng.random(n)))


def simulate_responses(mu: np.ndarray, sigma2: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """
    Transform a (replicates, n) matrix of uniforms into simplex responses,
    column t using (mu[t], sigma2[t]). Samplers are shared between equal columns.
    """
    uniforms = np.atleast_2d(uniforms)
    out = np.empty_like(uniforms, dtype=float)
    samplers: Dict[Tuple[float, float], SimplexSampler] = {}
    for t, (m, s2) in enumerate(zip(np.asarray(mu, dtype=float), np.asarray(sigma2, dtype=float))):
        key = (float(m), float(s2))
        if key not in samplers:
            samplers[key] = SimplexSampler(SimplexParams(mu=key[0], sigma2=key[1]))
        out[:, t] = samplers[key].ppf(uniforms[:, t])
    return out
