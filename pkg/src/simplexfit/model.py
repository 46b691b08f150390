"""
Simplex regression model: link functions, model specification and the
per-observation quantities every downstream computation reads.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, logit, ndtr, ndtri
from scipy.stats import norm

from simplexfit.errors import ConfigError, DomainError, InvalidStateError
from simplexfit.tools.formula import CompiledPredictor, ExpressionTree, compile_predictor, parse


####################################
# Links
####################################

class Link:
    """
    Link function with its inverse and first two derivatives.

    `forward`, `deriv` and `deriv2` are defined on the link's domain
    ((0, 1) for mean links, (0, inf) for dispersion links); `inverse`
    accepts any finite predictor value that maps back into that domain.
    """
    name: str = ""

    def _check(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def in_inverse_domain(self, eta: np.ndarray) -> np.ndarray:
        return np.isfinite(eta)

    def forward(self, x):
        return self._forward(self._check(np.asarray(x, dtype=float)))

    def inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        if not np.all(self.in_inverse_domain(eta)):
            raise DomainError(f"{self.name} inverse is undefined at non-finite or out-of-range values")
        return self._inverse(eta)

    def deriv(self, x):
        return self._deriv(self._check(np.asarray(x, dtype=float)))

    def deriv2(self, x):
        return self._deriv2(self._check(np.asarray(x, dtype=float)))

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class _MeanLink(Link):
    def _check(self, x):
        if np.any(~(np.isfinite(x) & (x > 0.0) & (x < 1.0))):
            raise DomainError(f"{self.name} link needs values strictly inside (0, 1)")
        return x


class _DispersionLink(Link):
    def _check(self, x):
        if np.any(~(np.isfinite(x) & (x > 0.0))):
            raise DomainError(f"{self.name} link needs positive values")
        return x


class Logit(_MeanLink):
    name = "logit"

    def _forward(self, mu):
        return logit(mu)

    def _inverse(self, eta):
        return expit(eta)

    def _deriv(self, mu):
        return 1.0 / (mu * (1.0 - mu))

    def _deriv2(self, mu):
        return (2.0 * mu - 1.0) / (mu * (1.0 - mu)) ** 2


class Probit(_MeanLink):
    name = "probit"

    def _forward(self, mu):
        return ndtri(mu)

    def _inverse(self, eta):
        return ndtr(eta)

    def _deriv(self, mu):
        return 1.0 / norm.pdf(ndtri(mu))

    def _deriv2(self, mu):
        g = ndtri(mu)
        return g / norm.pdf(g) ** 2


class CLogLog(_MeanLink):
    """g(mu) = log(-log(1 - mu))."""
    name = "cloglog"

    def _forward(self, mu):
        return np.log(-np.log1p(-mu))

    def _inverse(self, eta):
        return -np.expm1(-np.exp(eta))

    def _deriv(self, mu):
        return 1.0 / ((1.0 - mu) * -np.log1p(-mu))

    def _deriv2(self, mu):
        L = -np.log1p(-mu)
        return (L - 1.0) / ((1.0 - mu) * L) ** 2


class LogLog(_MeanLink):
    """g(mu) = log(-log(mu)); decreasing in mu."""
    name = "loglog"

    def _forward(self, mu):
        return np.log(-np.log(mu))

    def _inverse(self, eta):
        return np.exp(-np.exp(eta))

    def _deriv(self, mu):
        return -1.0 / (mu * -np.log(mu))

    def _deriv2(self, mu):
        L = -np.log(mu)
        return (L - 1.0) / (mu * L) ** 2


class Log(_DispersionLink):
    name = "log"

    def _forward(self, s):
        return np.log(s)

    def _inverse(self, zeta):
        return np.exp(zeta)

    def _deriv(self, s):
        return 1.0 / s

    def _deriv2(self, s):
        return -1.0 / (s * s)


class Sqrt(_DispersionLink):
    name = "sqrt"

    def in_inverse_domain(self, zeta):
        return np.isfinite(zeta) & (zeta > 0.0)

    def _forward(self, s):
        return np.sqrt(s)

    def _inverse(self, zeta):
        return zeta * zeta

    def _deriv(self, s):
        return 0.5 / np.sqrt(s)

    def _deriv2(self, s):
        return -0.25 / s ** 1.5


class Identity(_DispersionLink):
    name = "identity"

    def in_inverse_domain(self, zeta):
        return np.isfinite(zeta) & (zeta > 0.0)

    def _forward(self, s):
        return s

    def _inverse(self, zeta):
        return zeta.copy()

    def _deriv(self, s):
        return np.ones_like(s)

    def _deriv2(self, s):
        return np.zeros_like(s)


MEAN_LINKS: Dict[str, Link] = {link.name: link for link in (Logit(), Probit(), CLogLog(), LogLog())}
DISPERSION_LINKS: Dict[str, Link] = {link.name: link for link in (Log(), Sqrt(), Identity())}

_MODES = ("forward", "inverse", "deriv", "deriv2")
_MODE_ALIASES = {"d1": "deriv", "d2": "deriv2"}


def get_link(name: str, kind: str = "mean") -> Link:
    table = MEAN_LINKS if kind == "mean" else DISPERSION_LINKS
    try:
        return table[name]
    except KeyError:
        raise ConfigError(f"Unknown {kind} link '{name}' (choose from {', '.join(table)})") from None


def link_eval(name: str, mode: str, x):
    """
    Evaluate a link by name: mode is 'forward', 'inverse', 'deriv' (or 'd1')
    or 'deriv2' (or 'd2').

    Raises:
        ConfigError: Unknown link or mode
        DomainError: x outside the link's domain
    """
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in _MODES:
        raise ConfigError(f"Unknown link mode '{mode}'")
    link = MEAN_LINKS.get(name) or DISPERSION_LINKS.get(name)
    if link is None:
        raise ConfigError(f"Unknown link '{name}'")
    result = getattr(link, mode)(x)
    return result.item() if np.ndim(result) == 0 else result


####################################
# Model specification
####################################

@dataclass(frozen=True)
class ModelSpec:
    """Mean and dispersion submodels with disjoint parameter vectors."""
    mean_formula: ExpressionTree
    dispersion_formula: ExpressionTree
    mean_link: Link
    dispersion_link: Link
    beta_names: Tuple[str, ...]
    gamma_names: Tuple[str, ...]
    pinned_starts: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        shared = set(self.beta_names) & set(self.gamma_names)
        if shared:
            raise ConfigError(f"Parameters shared between submodels: {', '.join(sorted(shared))}")
        for label, tree, names in (
            ("mean", self.mean_formula, self.beta_names),
            ("dispersion", self.dispersion_formula, self.gamma_names),
        ):
            if set(tree.parameters) != set(names) or len(names) != len(set(names)):
                raise ConfigError(
                    f"The {label} parameters {list(names)} do not match those referenced by "
                    f"'{tree}': {list(tree.parameters)}"
                )
            if not names:
                raise ConfigError(f"The {label} formula has no parameters")
        unknown = set(self.pinned_starts) - set(self.beta_names) - set(self.gamma_names)
        if unknown:
            raise ConfigError(f"Pinned values for unknown parameters: {', '.join(sorted(unknown))}")

    @classmethod
    def from_formulas(
        cls,
        mean: str,
        dispersion: str = "g1",
        mean_link: str = "logit",
        dispersion_link: str = "log",
        beta_names: Optional[Sequence[str]] = None,
        gamma_names: Optional[Sequence[str]] = None,
        mean_prefix: str = "b",
        dispersion_prefix: str = "g",
        pinned_starts: Optional[Mapping[str, float]] = None,
    ) -> "ModelSpec":
        """
        Parse both formulas and bind their parameters.

        Parameter order is the declared order when names are given and the
        order of first appearance otherwise.
        """
        mean_tree = parse(mean, beta_names, prefixes=(mean_prefix,))
        dispersion_tree = parse(dispersion, gamma_names, prefixes=(dispersion_prefix,))
        return cls(
            mean_formula=mean_tree,
            dispersion_formula=dispersion_tree,
            mean_link=get_link(mean_link, "mean"),
            dispersion_link=get_link(dispersion_link, "dispersion"),
            beta_names=tuple(beta_names) if beta_names is not None else mean_tree.parameters,
            gamma_names=tuple(gamma_names) if gamma_names is not None else dispersion_tree.parameters,
            pinned_starts=dict(pinned_starts or {}),
        )

    @classmethod
    def from_config(cls, config) -> "ModelSpec":
        if config.mean is None:
            raise ConfigError("Run document has no 'mean' section")
        return cls.from_formulas(
            mean=config.mean.formula,
            dispersion=config.dispersion.formula,
            mean_link=config.mean.link,
            dispersion_link=config.dispersion.link,
            beta_names=config.mean.parameters,
            gamma_names=config.dispersion.parameters,
            mean_prefix=config.mean.parameter_prefix,
            dispersion_prefix=config.dispersion.parameter_prefix,
            pinned_starts=config.pinned_starts,
        )

    @property
    def k(self) -> int:
        return len(self.beta_names)

    @property
    def q(self) -> int:
        return len(self.gamma_names)

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return self.beta_names + self.gamma_names

    @property
    def covariates(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(self.mean_formula.covariates + self.dispersion_formula.covariates))

    @cached_property
    def mean_predictor(self) -> CompiledPredictor:
        return compile_predictor(self.mean_formula, self.beta_names)

    @cached_property
    def dispersion_predictor(self) -> CompiledPredictor:
        return compile_predictor(self.dispersion_formula, self.gamma_names)


####################################
# Design state
####################################

@dataclass
class DesignState:
    """
    Per-observation quantities at one (beta, gamma).

    Weights follow the naming used throughout the package: `s` = 1/sigma^2,
    `t` = 1/g'(mu), `h` = 1/h'(sigma^2); `d` is the Fisher weight for the
    dispersion predictor and `deviance` the unit deviance.
    """
    beta: np.ndarray
    gamma: np.ndarray
    y: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    deviance: np.ndarray
    loglik_terms: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    s: np.ndarray
    t: np.ndarray
    h: np.ndarray
    a: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    q: np.ndarray
    v: np.ndarray
    w: np.ndarray
    d: np.ndarray
    nu: np.ndarray
    m: np.ndarray
    b: np.ndarray
    b_beta: np.ndarray
    b_gamma: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    X_beta: np.ndarray
    Z_gamma: np.ndarray

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def loglik(self) -> float:
        return math.fsum(self.loglik_terms)

    @property
    def residual(self) -> np.ndarray:
        return self.y - self.mu


def _first_bad(ok: np.ndarray) -> int:
    return int(np.flatnonzero(~ok)[0])


def mean_and_dispersion(
    spec: ModelSpec,
    columns: Mapping[str, np.ndarray],
    n: int,
    beta: np.ndarray,
    gamma: np.ndarray,
    iteration: Optional[int] = None,
):
    """
    Predictors and fitted (mu, sigma^2), checked against their domains.

    Returns:
        (mean PredictorValues, dispersion PredictorValues, mu, sigma2)

    Raises:
        InvalidStateError: mu reaches 0 or 1, or sigma^2 is not positive and finite
        DomainError: A formula is undefined at some observation
    """
    mean_values = spec.mean_predictor.evaluate(beta, columns, n)
    dispersion_values = spec.dispersion_predictor.evaluate(gamma, columns, n)

    with np.errstate(all="ignore"):
        mu = spec.mean_link._inverse(mean_values.value)
    ok = np.isfinite(mu) & (mu > 0.0) & (mu < 1.0)
    if not np.all(ok):
        t = _first_bad(ok)
        raise InvalidStateError(
            f"mu_hat reached {mu[t]!r} (eta = {mean_values.value[t]:.6g}); it must stay inside (0, 1)",
            observation=t,
            iteration=iteration,
        )

    zeta = dispersion_values.value
    ok = spec.dispersion_link.in_inverse_domain(zeta)
    if np.all(ok):
        with np.errstate(all="ignore"):
            sigma2 = spec.dispersion_link._inverse(zeta)
        ok = np.isfinite(sigma2) & (sigma2 > 0.0)
    if not np.all(ok):
        t = _first_bad(ok)
        raise InvalidStateError(
            f"sigma2_hat is not positive and finite (zeta = {zeta[t]:.6g})",
            observation=t,
            iteration=iteration,
        )
    return mean_values, dispersion_values, mu, sigma2


def assemble(
    spec: ModelSpec,
    data,
    beta: Sequence[float],
    gamma: Sequence[float],
    iteration: Optional[int] = None,
) -> DesignState:
    """
    Evaluate every per-observation quantity at (beta, gamma).

    Args:
        spec: Model specification
        data: Dataset with the response and covariate columns
        beta, gamma: Parameter vectors in spec order
        iteration: Reported in errors raised during a fit

    Raises:
        InvalidStateError: The state is undefined at some observation
    """
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    y = data.y
    mean_values, dispersion_values, mu, sigma2 = mean_and_dispersion(
        spec, data.columns, data.n, beta, gamma, iteration
    )

    with np.errstate(all="ignore"):
        c = mu * (1.0 - mu)
        e = y - mu
        y1y = y * (1.0 - y)
        dev = e * e / (y1y * c * c)
        loglik_terms = -0.5 * math.log(2.0 * math.pi) - 0.5 * np.log(sigma2) - 1.5 * np.log(y1y) - dev / (2.0 * sigma2)

        g1 = spec.mean_link._deriv(mu)
        g2 = spec.mean_link._deriv2(mu)
        h1 = spec.dispersion_link._deriv(sigma2)
        h2 = spec.dispersion_link._deriv2(sigma2)
        s = 1.0 / sigma2
        t = 1.0 / g1
        h = 1.0 / h1

        a = dev / (2.0 * sigma2 ** 2) - 1.0 / (2.0 * sigma2)
        u = (dev + 1.0 / (c * c)) / c
        u_prime = -(2.0 * e * u / c + 3.0 * (1.0 - 2.0 * mu) / c ** 4 + (1.0 - 2.0 * mu) * dev / (c * c))
        q = (u - e * u_prime + e * u * g2 / g1) / (g1 * g1)
        v = sigma2 * (3.0 * sigma2 / c + 1.0 / c ** 3)
        w = v / (sigma2 * g1 * g1)
        d = 1.0 / (2.0 * sigma2 ** 2 * h1 * h1)
        nu = d + a * (2.0 / (sigma2 * h1 * h1) + h2 / h1 ** 3)

        # derivatives of the mean and dispersion scores in y
        d_dev_dmu = -2.0 * u * e
        m = (
            2.0 / (y * (1.0 - mu) ** 3)
            + (1.0 - 3.0 * mu) / (mu * mu * (1.0 - mu) ** 3)
            - 0.5 * d_dev_dmu
        ) / y1y
        b = (dev + 2.0 * e / (y * mu * (1.0 - mu) ** 2)) / (2.0 * sigma2 * y1y)

        b_beta = s * t * u * e
        b_gamma = h * a

    quantities = dict(
        deviance=dev, loglik_terms=loglik_terms, g1=g1, g2=g2, h1=h1, h2=h2, s=s, t=t, h=h,
        a=a, u=u, u_prime=u_prime, q=q, v=v, w=w, d=d, nu=nu, m=m, b=b,
        b_beta=b_beta, b_gamma=b_gamma,
    )
    for name, values in quantities.items():
        ok = np.isfinite(values)
        if not np.all(ok):
            raise InvalidStateError(f"{name} is not finite", observation=_first_bad(ok), iteration=iteration)

    return DesignState(
        beta=beta,
        gamma=gamma,
        y=y,
        eta=mean_values.value,
        zeta=dispersion_values.value,
        mu=mu,
        sigma2=sigma2,
        X=mean_values.jacobian,
        Z=dispersion_values.jacobian,
        X_beta=mean_values.hessian,
        Z_gamma=dispersion_values.hessian,
        **quantities,
    )


def log_likelihood(spec: ModelSpec, data, beta: Sequence[float], gamma: Sequence[float]) -> float:
    return assemble(spec, data, beta, gamma).loglik
