"""
Exact derivatives of predictor formulas.

`compile_predictor` differentiates a tree once and evaluates the value,
Jacobian and Hessian trees over whole datasets; `differentiate` is the
single-row view used for inspection.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from simplexfit.errors import UnboundNameError
from simplexfit.tools.formula.tree import (
    ZERO,
    Covariate,
    ExpressionTree,
    Node,
    Param,
    diff,
    evaluate,
    is_const,
)


@dataclass
class DerivativeBundle:
    """Value and derivatives of a predictor at one row."""
    value: float
    grad_params: np.ndarray
    hess_params: np.ndarray
    d_covariate: Optional[float] = None
    mixed_param_covariate: Optional[np.ndarray] = None


@dataclass
class PredictorValues:
    """Value (n,), Jacobian (n, k) and parameter Hessians (n, k, k) over a dataset."""
    value: np.ndarray
    jacobian: np.ndarray
    hessian: np.ndarray


class CompiledPredictor:
    """A formula differentiated once with respect to an ordered parameter list."""

    def __init__(self, tree: ExpressionTree, parameter_names: Sequence[str]):
        missing = [p for p in tree.parameters if p not in parameter_names]
        if missing:
            raise UnboundNameError(f"Formula parameters without a declared slot: {', '.join(missing)}")
        self.tree = tree
        self.parameter_names: Tuple[str, ...] = tuple(parameter_names)
        self.gradient: List[Node] = [diff(tree.root, Param(p)) for p in self.parameter_names]
        k = len(self.parameter_names)
        self.hessian: List[List[Node]] = [[ZERO] * k for _ in range(k)]
        for i in range(k):
            for j in range(i, k):
                self.hessian[i][j] = diff(self.gradient[i], Param(self.parameter_names[j]))
                self.hessian[j][i] = self.hessian[i][j]
        self._covariate_trees: Dict[str, Tuple[Node, List[Node]]] = {}

    @property
    def k(self) -> int:
        return len(self.parameter_names)

    @cached_property
    def is_linear(self) -> bool:
        return all(is_const(node, 0.0) for row in self.hessian for node in row)

    def _params(self, theta: Sequence[float]) -> Dict[str, float]:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.k,):
            raise ValueError(f"expected {self.k} parameter values, got shape {theta.shape}")
        return dict(zip(self.parameter_names, theta.tolist()))

    @staticmethod
    def _column(node: Node, params, data, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(evaluate(node, params, data), dtype=float), (n,)).copy()

    def evaluate(self, theta: Sequence[float], data: Mapping[str, np.ndarray], n: int) -> PredictorValues:
        params = self._params(theta)
        value = self._column(self.tree.root, params, data, n)
        jac = np.zeros((n, self.k))
        hess = np.zeros((n, self.k, self.k))
        for i, node in enumerate(self.gradient):
            jac[:, i] = self._column(node, params, data, n)
            for j in range(i, self.k):
                column = self._column(self.hessian[i][j], params, data, n)
                hess[:, i, j] = column
                hess[:, j, i] = column
        return PredictorValues(value=value, jacobian=jac, hessian=hess)

    def value(self, theta: Sequence[float], data: Mapping[str, np.ndarray], n: int) -> np.ndarray:
        return self._column(self.tree.root, self._params(theta), data, n)

    def covariate_trees(self, covariate: str) -> Tuple[Node, List[Node]]:
        if covariate not in self._covariate_trees:
            wrt = Covariate(covariate)
            self._covariate_trees[covariate] = (
                diff(self.tree.root, wrt),
                [diff(node, wrt) for node in self.gradient],
            )
        return self._covariate_trees[covariate]

    def covariate_derivatives(
        self, theta: Sequence[float], data: Mapping[str, np.ndarray], n: int, covariate: str
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Derivatives with respect to one covariate.

        Returns:
            (d eta / d x) of shape (n,) and (d^2 eta / d theta d x) of shape (n, k).
            Both are zero when the formula does not reference the covariate.
        """
        params = self._params(theta)
        d_cov, mixed = self.covariate_trees(covariate)
        mixed_cols = np.zeros((n, self.k))
        for i, node in enumerate(mixed):
            mixed_cols[:, i] = self._column(node, params, data, n)
        return self._column(d_cov, params, data, n), mixed_cols


def compile_predictor(tree: ExpressionTree, parameter_names: Optional[Sequence[str]] = None) -> CompiledPredictor:
    return CompiledPredictor(tree, parameter_names if parameter_names is not None else tree.parameters)


def differentiate(
    tree: ExpressionTree,
    params: Mapping[str, float],
    row: Mapping[str, float],
    perturbed_covariate: Optional[str] = None,
) -> DerivativeBundle:
    """
    Value, gradient and Hessian of a formula at one row.

    Args:
        tree: Parsed formula
        params: Parameter values; their order fixes the gradient order
        row: Covariate values for the row
        perturbed_covariate: When given, also return derivatives in that covariate

    Raises:
        UnboundNameError: A referenced parameter or covariate has no value
        DomainError: The formula is undefined at this point
    """
    predictor = CompiledPredictor(tree, list(params))
    data = {name: np.asarray([float(value)]) for name, value in row.items()}
    values = predictor.evaluate(list(params.values()), data, 1)
    bundle = DerivativeBundle(
        value=float(values.value[0]),
        grad_params=values.jacobian[0],
        hess_params=values.hessian[0],
    )
    if perturbed_covariate is not None:
        d_cov, mixed = predictor.covariate_derivatives(
            list(params.values()), data, 1, perturbed_covariate
        )
        bundle.d_covariate = float(d_cov[0])
        bundle.mixed_param_covariate = mixed[0]
    return bundle
