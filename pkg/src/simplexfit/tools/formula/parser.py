"""
Recursive-descent parser for predictor formulas.

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Unary minus binds looser than '^', so '-x^2' is '-(x^2)'; '^' is right-associative.
"""

import re
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

from simplexfit.errors import FormulaSyntaxError, UnknownFunctionError
from simplexfit.tools.formula.tree import (
    FUNCTIONS,
    BinOp,
    Const,
    Covariate,
    ExpressionTree,
    Func,
    Neg,
    Node,
    Param,
)

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            raise FormulaSyntaxError(f"unexpected character '{text[pos]}'", pos, text)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, is_parameter):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0
        self.is_parameter = is_parameter

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def _error(self, message: str, token: Optional[Token] = None):
        token = token or self.current
        return FormulaSyntaxError(message, token.position, self.text)

    def _expect(self, text: str) -> None:
        if self.current.text != text:
            found = f"'{self.current.text}'" if self.current.kind != "end" else "end of formula"
            raise self._error(f"expected '{text}' but found {found}")
        self._advance()

    def parse(self) -> Node:
        if self.current.kind == "end":
            raise self._error("empty formula")
        node = self._expr()
        if self.current.kind != "end":
            raise self._error(f"unexpected '{self.current.text}'")
        return node

    def _expr(self) -> Node:
        node = self._term()
        while self.current.text in ("+", "-"):
            op = self._advance().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Node:
        node = self._factor()
        while self.current.text in ("*", "/"):
            op = self._advance().text
            node = BinOp(op, node, self._factor())
        return node

    def _factor(self) -> Node:
        if self.current.text == "-":
            self._advance()
            operand = self._factor()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Neg(operand)
        return self._power()

    def _power(self) -> Node:
        base = self._atom()
        if self.current.text == "^":
            self._advance()
            return BinOp("^", base, self._factor())
        return base

    def _atom(self) -> Node:
        token = self.current
        if token.kind == "number":
            self._advance()
            return Const(float(token.text))

        if token.kind == "ident":
            self._advance()
            if self.current.text == "(":
                if token.text not in FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function '{token.text}' (expected one of {', '.join(FUNCTIONS)})",
                        token.position,
                        self.text,
                    )
                self._advance()
                arg = self._expr()
                self._expect(")")
                return Func(token.text, arg)
            if token.text in FUNCTIONS:
                raise self._error(f"function '{token.text}' needs an argument list", token)
            if self.is_parameter(token.text):
                return Param(token.text)
            return Covariate(token.text)

        if token.text == "(":
            self._advance()
            node = self._expr()
            self._expect(")")
            return node

        if token.kind == "end":
            raise self._error("unexpected end of formula")
        raise self._error(f"unexpected '{token.text}'")


def parse(
    text: str,
    parameters: Optional[Iterable[str]] = None,
    prefixes: Sequence[str] = ("b", "g"),
) -> ExpressionTree:
    """
    Parse a formula into an expression tree.

    Args:
        text: Formula text, e.g. "b1 + x2^b2 + b3*x3"
        parameters: Declared parameter names. When omitted, identifiers of the
            form <prefix><digits> are parameters and every other identifier
            is a covariate.
        prefixes: Parameter prefixes used when `parameters` is omitted

    Returns:
        ExpressionTree with parameter and covariate tables

    Raises:
        FormulaSyntaxError: Malformed text; carries the offending position
        UnknownFunctionError: Call syntax with a name other than sqrt/log/exp
    """
    if parameters is not None:
        declared = set(parameters)

        def is_parameter(name: str) -> bool:
            return name in declared
    else:
        pattern = re.compile(rf"(?:{'|'.join(re.escape(p) for p in prefixes)})\d+")

        def is_parameter(name: str) -> bool:
            return pattern.fullmatch(name) is not None

    return ExpressionTree.from_root(_Parser(text, is_parameter).parse())
