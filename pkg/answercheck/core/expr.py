"""
Expression trees for single-variable elementary expressions.

Nodes are frozen dataclasses: immutable, hashable and compared structurally,
so trees can be shared between concurrent checks and used as dict keys by the
symbolic stage.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

from answercheck.core.exceptions import VariableMismatchError


class BinaryOp(str, Enum):
    """Binary operators with their infix symbols."""
    ADD = "+"
    SUB = "-"
    MUL = "*"
    DIV = "/"
    POW = "^"


class NamedConstantName(str, Enum):
    PI = "pi"
    E = "e"


@dataclass(frozen=True)
class Expr:
    """Base class for expression tree nodes."""

    def children(self) -> tuple["Expr", ...]:
        return ()

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class IntegerLiteral(Expr):
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("IntegerLiteral holds magnitudes; negate with UnaryNeg")


@dataclass(frozen=True)
class DecimalLiteral(Expr):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError("DecimalLiteral must be finite and non-negative")


@dataclass(frozen=True)
class NamedConstant(Expr):
    name: NamedConstantName


@dataclass(frozen=True)
class Variable(Expr):
    name: str


@dataclass(frozen=True)
class UnaryNeg(Expr):
    operand: Expr

    def children(self) -> tuple[Expr, ...]:
        return (self.operand,)


@dataclass(frozen=True)
class Binary(Expr):
    op: BinaryOp
    left: Expr
    right: Expr

    def children(self) -> tuple[Expr, ...]:
        return (self.left, self.right)


@dataclass(frozen=True)
class FunctionApp(Expr):
    name: str
    argument: Expr

    def children(self) -> tuple[Expr, ...]:
        return (self.argument,)


@dataclass(frozen=True)
class DomainErrorMark(Expr):
    """
    A subtree known to be undefined everywhere (e.g. division by literal zero).

    Only the symbolic stage creates these; it keeps the offending subtree
    as-is and evaluation reports a domain error for it.
    """
    operand: Expr

    def children(self) -> tuple[Expr, ...]:
        return (self.operand,)


PI = NamedConstant(NamedConstantName.PI)
E = NamedConstant(NamedConstantName.E)


def Add(left: Expr, right: Expr) -> Binary:
    return Binary(BinaryOp.ADD, left, right)


def Sub(left: Expr, right: Expr) -> Binary:
    return Binary(BinaryOp.SUB, left, right)


def Mul(left: Expr, right: Expr) -> Binary:
    return Binary(BinaryOp.MUL, left, right)


def Div(left: Expr, right: Expr) -> Binary:
    return Binary(BinaryOp.DIV, left, right)


def Pow(left: Expr, right: Expr) -> Binary:
    return Binary(BinaryOp.POW, left, right)


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal without recursion."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def free_variables(e: Expr) -> set[str]:
    return {node.name for node in walk(e) if isinstance(node, Variable)}


def node_count(e: Expr) -> int:
    return sum(1 for _ in walk(e))


# =============================================================================
# Printing
# =============================================================================

# Binding strength of each form; an operand is parenthesized when its level is
# below what the grammar allows in that position.
_LEVEL_SUM = 1
_LEVEL_TERM = 2
_LEVEL_FACTOR = 3  # unary minus
_LEVEL_POWER = 4
_LEVEL_ATOM = 5

_BINARY_LEVEL = {
    BinaryOp.ADD: _LEVEL_SUM,
    BinaryOp.SUB: _LEVEL_SUM,
    BinaryOp.MUL: _LEVEL_TERM,
    BinaryOp.DIV: _LEVEL_TERM,
    BinaryOp.POW: _LEVEL_POWER,
}


def _level(e: Expr) -> int:
    while isinstance(e, DomainErrorMark):
        e = e.operand
    if isinstance(e, Binary):
        return _BINARY_LEVEL[e.op]
    if isinstance(e, UnaryNeg):
        return _LEVEL_FACTOR
    return _LEVEL_ATOM


def _wrap(child: Expr, text: str, minimum: int) -> str:
    return f"({text})" if _level(child) < minimum else text


def _leaf_text(e: Expr) -> str:
    if isinstance(e, IntegerLiteral):
        return str(e.value)
    if isinstance(e, DecimalLiteral):
        return repr(e.value)
    if isinstance(e, NamedConstant):
        return e.name.value
    if isinstance(e, Variable):
        return e.name
    raise TypeError(f"Unknown expression node: {type(e).__name__}")


def _join(e: Expr, texts: list[str]) -> str:
    if isinstance(e, FunctionApp):
        return f"{e.name}({texts[0]})"
    if isinstance(e, UnaryNeg):
        return "-" + _wrap(e.operand, texts[0], _LEVEL_FACTOR)
    left, right = texts
    if e.op is BinaryOp.POW:
        # power := atom ("^" factor)?
        return f"{_wrap(e.left, left, _LEVEL_ATOM)}^{_wrap(e.right, right, _LEVEL_FACTOR)}"
    level = _BINARY_LEVEL[e.op]
    # left-associative: the left operand may sit at the same level
    return f"{_wrap(e.left, left, level)}{e.op.value}{_wrap(e.right, right, level + 1)}"


def format_expr(e: Expr) -> str:
    """Minimal-parenthesization infix text; parse(format_expr(e)) == e."""
    texts: list[str] = []
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if ready:
            arity = len(node.children())
            parts = texts[len(texts) - arity:]
            del texts[len(texts) - arity:]
            texts.append(_join(node, parts))
        elif isinstance(node, DomainErrorMark):
            stack.append((node.operand, False))
        elif isinstance(node, (FunctionApp, UnaryNeg, Binary)):
            stack.append((node, True))
            stack.extend((child, False) for child in reversed(node.children()))
        else:
            texts.append(_leaf_text(node))
    return texts[0]


# =============================================================================
# Difference construction
# =============================================================================

def difference(f_real: Expr, f_user: Expr) -> Expr:
    """
    Build f = f_real - f_user without simplifying.

    Raises VariableMismatchError when the two sides use different variables.
    """
    names = free_variables(f_real) | free_variables(f_user)
    if len(names) > 1:
        raise VariableMismatchError(
            f"Expressions use different variables: {', '.join(sorted(names))}"
        )
    return Sub(f_real, f_user)
