"""
Expression trees for predictor formulas.

Nodes are immutable; equality is structural. The module-level constructors
(`add`, `mul`, `power`, ...) fold constants and drop neutral elements so that
derivative trees stay small and exact zeros are recognisable.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Tuple, Union

import numpy as np

from simplexfit.errors import DomainError, UnboundNameError

FUNCTIONS = ("sqrt", "log", "exp")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Covariate:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


Node = Union[Const, Param, Covariate, BinOp, Func, Neg]

ZERO = Const(0.0)
ONE = Const(1.0)
TWO = Const(2.0)


####################################
# Simplifying constructors
####################################

def is_const(node: Node, value: float = None) -> bool:
    if not isinstance(node, Const):
        return False
    return value is None or node.value == value


def add(a: Node, b: Node) -> Node:
    if is_const(a) and is_const(b):
        return Const(a.value + b.value)
    if is_const(a, 0.0):
        return b
    if is_const(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if is_const(a) and is_const(b):
        return Const(a.value - b.value)
    if is_const(b, 0.0):
        return a
    if is_const(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if is_const(a) and is_const(b):
        return Const(a.value * b.value)
    if is_const(a, 0.0) or is_const(b, 0.0):
        return ZERO
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    if is_const(a, -1.0):
        return neg(b)
    if is_const(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Node, b: Node) -> Node:
    if is_const(a, 0.0):
        return ZERO
    if is_const(b, 1.0):
        return a
    if is_const(a) and is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    return BinOp("/", a, b)


def power(a: Node, b: Node) -> Node:
    if is_const(b, 0.0):
        return ONE
    if is_const(b, 1.0):
        return a
    if is_const(a) and is_const(b) and a.value > 0.0:
        return Const(a.value ** b.value)
    return BinOp("^", a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def func(name: str, a: Node) -> Node:
    if isinstance(a, Const):
        if name == "exp":
            return Const(math.exp(a.value))
        if name == "log" and a.value > 0.0:
            return Const(math.log(a.value))
        if name == "sqrt" and a.value >= 0.0:
            return Const(math.sqrt(a.value))
    return Func(name, a)


_BUILDERS = {"+": add, "-": sub, "*": mul, "/": div, "^": power}


def rebuild(node: Node, leaf: callable) -> Node:
    """Rebuild a tree bottom-up through the simplifying constructors."""
    if isinstance(node, (Const, Param, Covariate)):
        return leaf(node)
    if isinstance(node, Neg):
        return neg(rebuild(node.arg, leaf))
    if isinstance(node, Func):
        return func(node.name, rebuild(node.arg, leaf))
    return _BUILDERS[node.op](rebuild(node.left, leaf), rebuild(node.right, leaf))


####################################
# Tree
####################################

def _collect(node: Node, kind: type, seen: Dict[str, None]) -> None:
    if isinstance(node, kind):
        seen.setdefault(node.name, None)
    elif isinstance(node, BinOp):
        _collect(node.left, kind, seen)
        _collect(node.right, kind, seen)
    elif isinstance(node, (Func, Neg)):
        _collect(node.arg, kind, seen)


@dataclass(frozen=True)
class ExpressionTree:
    """A parsed predictor with its parameter and covariate symbol tables (first-appearance order)."""
    root: Node
    parameters: Tuple[str, ...] = field(default=())
    covariates: Tuple[str, ...] = field(default=())

    @classmethod
    def from_root(cls, root: Node) -> "ExpressionTree":
        params: Dict[str, None] = {}
        covs: Dict[str, None] = {}
        _collect(root, Param, params)
        _collect(root, Covariate, covs)
        return cls(root=root, parameters=tuple(params), covariates=tuple(covs))

    def __str__(self) -> str:
        return to_string(self.root)


def to_string(node: Union[Node, ExpressionTree]) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, ExpressionTree):
        node = node.root
    if isinstance(node, Const):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 or text.startswith("-") else text
    if isinstance(node, (Param, Covariate)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_string(node.arg)})"
    if isinstance(node, Func):
        return f"{node.name}({to_string(node.arg)})"
    return f"({to_string(node.left)} {node.op} {to_string(node.right)})"


def substitute(tree: ExpressionTree, values: Mapping[str, float]) -> ExpressionTree:
    """Replace the named parameters by numeric constants and fold."""
    def leaf(node):
        if isinstance(node, Param) and node.name in values:
            return Const(float(values[node.name]))
        return node

    return ExpressionTree.from_root(rebuild(tree.root, leaf))


####################################
# Evaluation
####################################

def _check(result: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(result)
    if np.any(bad):
        first = int(np.flatnonzero(np.atleast_1d(bad))[0])
        raise DomainError(f"{what} is not finite (observation {first + 1})")
    return result


def _fail_where(mask, message: str) -> None:
    mask = np.atleast_1d(mask)
    if np.any(mask):
        first = int(np.flatnonzero(mask)[0])
        raise DomainError(f"{message} (observation {first + 1})")


def evaluate(node: Node, params: Mapping[str, float], covariates: Mapping[str, np.ndarray]):
    """
    Evaluate a node element-wise over covariate arrays.

    Raises:
        DomainError: log/sqrt of non-positive values, division by zero,
            negative bases, 0 to a negative power, or overflow
        UnboundNameError: a referenced name has no value
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Param):
        try:
            return params[node.name]
        except KeyError:
            raise UnboundNameError(f"Parameter '{node.name}' has no value") from None
    if isinstance(node, Covariate):
        try:
            return covariates[node.name]
        except KeyError:
            raise UnboundNameError(f"Covariate '{node.name}' is not a data column") from None

    with np.errstate(all="ignore"):
        if isinstance(node, Neg):
            return -evaluate(node.arg, params, covariates)

        if isinstance(node, Func):
            x = np.asarray(evaluate(node.arg, params, covariates), dtype=float)
            if node.name == "log":
                _fail_where(x <= 0.0, "log of a non-positive value")
                return np.log(x)
            if node.name == "sqrt":
                _fail_where(x < 0.0, "sqrt of a negative value")
                return np.sqrt(x)
            return _check(np.exp(x), "exp")

        left = evaluate(node.left, params, covariates)
        right = evaluate(node.right, params, covariates)
        if node.op == "+":
            return _check(np.add(left, right), "sum")
        if node.op == "-":
            return _check(np.subtract(left, right), "difference")
        if node.op == "*":
            return _check(np.multiply(left, right), "product")
        if node.op == "/":
            _fail_where(np.asarray(right) == 0.0, "division by zero")
            return _check(np.divide(left, right), "quotient")

        base = np.asarray(left, dtype=float)
        expo = np.asarray(right, dtype=float)
        # negative bases only under a literal integer exponent such as x^2
        integer_literal = isinstance(node.right, Const) and float(node.right.value).is_integer()
        if not integer_literal:
            _fail_where(base < 0.0, "negative base in power")
        _fail_where((base == 0.0) & (expo < 0.0), "zero raised to a negative power")
        return _check(np.power(base, expo), "power")


####################################
# Symbolic differentiation
####################################

def diff(node: Node, wrt: Union[Param, Covariate]) -> Node:
    """Exact derivative of `node` with respect to a parameter or covariate leaf."""
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, (Param, Covariate)):
        return ONE if node == wrt else ZERO
    if isinstance(node, Neg):
        return neg(diff(node.arg, wrt))
    if isinstance(node, Func):
        du = diff(node.arg, wrt)
        if is_const(du, 0.0):
            return ZERO
        if node.name == "sqrt":
            return div(du, mul(TWO, node))
        if node.name == "log":
            return div(du, node.arg)
        return mul(node, du)

    left, right = node.left, node.right
    dl = diff(left, wrt)
    dr = diff(right, wrt)
    if node.op == "+":
        return add(dl, dr)
    if node.op == "-":
        return sub(dl, dr)
    if node.op == "*":
        return add(mul(dl, right), mul(left, dr))
    if node.op == "/":
        return div(sub(mul(dl, right), mul(left, dr)), power(right, TWO))

    # u ^ v
    if is_const(dr, 0.0):
        return mul(mul(right, power(left, sub(right, ONE))), dl)
    if is_const(dl, 0.0):
        return mul(mul(node, func("log", left)), dr)
    return mul(node, add(mul(dr, func("log", left)), div(mul(right, dl), left)))


def nonlinear_parameters(tree: ExpressionTree, names: Iterable[str]) -> Tuple[str, ...]:
    """Parameters among `names` involved in a second derivative that is not identically zero."""
    names = tuple(names)
    firsts = {name: diff(tree.root, Param(name)) for name in names}
    involved: Dict[str, None] = {}
    for i, a in enumerate(names):
        for b in names[i:]:
            if not is_const(diff(firsts[a], Param(b)), 0.0):
                involved.setdefault(a, None)
                involved.setdefault(b, None)
    return tuple(involved)


def is_linear_in(tree: ExpressionTree, names: Iterable[str]) -> bool:
    return not nonlinear_parameters(tree, names)
