"""
Recursive-descent parser for answer expressions.

Grammar (whitespace-insensitive):

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | "pi" | "e" | IDENT "(" expr ")" | VAR | "(" expr ")"

Precedence is ^ > unary minus > * / > + -; ^ is right-associative and there is
no implicit multiplication. Offsets in ParseError are UTF-8 byte offsets.
"""
import logging
import re
from dataclasses import dataclass
from typing import Optional, Union

from answercheck import settings
from answercheck.core.exceptions import ParseError
from answercheck.core.expr import (
    Binary,
    BinaryOp,
    DecimalLiteral,
    Expr,
    FunctionApp,
    IntegerLiteral,
    NamedConstant,
    NamedConstantName,
    UnaryNeg,
    Variable,
)
from answercheck.core.registry import function_registry

logger = logging.getLogger(__name__)

DEFAULT_VARIABLE = "x"

_TOKEN_RE = re.compile(
    r"""
    (?P<number>[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | op | end
    text: str
    position: int  # character index


def validate_variable_name(name: str) -> str:
    """Reject variable names that collide with constants or function names."""
    if not _IDENT_RE.match(name):
        raise ValueError(f"Invalid variable name: {name!r}")
    if name in {c.value for c in NamedConstantName} or function_registry.is_registered(name):
        raise ValueError(f"Variable name {name!r} is reserved")
    return name


class _Parser:
    def __init__(self, text: str, variable: str):
        self.text = text
        self.variable = variable
        self.tokens = self._tokenize(text)
        self.index = 0
        self.depth = 0

    # -- tokens -------------------------------------------------------------

    def _offset(self, position: int) -> int:
        return len(self.text[:position].encode("utf-8"))

    def _tokenize(self, text: str) -> list[Token]:
        tokens = []
        pos = 0
        while pos < len(text):
            if text[pos].isspace():
                pos += 1
                continue
            match = _TOKEN_RE.match(text, pos)
            if not match:
                raise ParseError(self._offset(pos), "a number, name, operator or parenthesis",
                                 repr(text[pos]))
            tokens.append(Token(match.lastgroup, match.group(), pos))
            pos = match.end()
        tokens.append(Token("end", "", len(text)))
        return tokens

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _describe(self, token: Token) -> str:
        return "end of input" if token.kind == "end" else repr(token.text)

    def _fail(self, expected: str) -> ParseError:
        return ParseError(self._offset(self.current.position), expected, self._describe(self.current))

    def _accept(self, *ops: str) -> Optional[Token]:
        token = self.current
        if token.kind == "op" and token.text in ops:
            self.index += 1
            return token
        return None

    def _expect(self, op: str) -> None:
        if not self._accept(op):
            raise self._fail(repr(op))

    def _enter(self) -> None:
        self.depth += 1
        if self.depth > settings.MAX_PARSE_NESTING:
            raise self._fail(f"at most {settings.MAX_PARSE_NESTING} nested levels")

    # -- grammar ------------------------------------------------------------

    def parse(self) -> Expr:
        result = self.expr()
        if self.current.kind != "end":
            raise self._fail("an operator or end of input")
        return result

    def expr(self) -> Expr:
        left = self.term()
        while token := self._accept("+", "-"):
            op = BinaryOp.ADD if token.text == "+" else BinaryOp.SUB
            left = Binary(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while token := self._accept("*", "/"):
            op = BinaryOp.MUL if token.text == "*" else BinaryOp.DIV
            left = Binary(op, left, self.factor())
        return left

    def factor(self) -> Expr:
        if self._accept("-"):
            self._enter()
            operand = self.factor()
            self.depth -= 1
            return UnaryNeg(operand)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._accept("^"):
            self._enter()
            exponent = self.factor()
            self.depth -= 1
            return Binary(BinaryOp.POW, base, exponent)
        return base

    def atom(self) -> Expr:
        token = self.current

        if token.kind == "number":
            self.index += 1
            return self._number(token)

        if token.kind == "ident":
            self.index += 1
            return self._identifier(token)

        if self._accept("("):
            self._enter()
            inner = self.expr()
            self._expect(")")
            self.depth -= 1
            return inner

        raise self._fail("a number, name or '('")

    def _number(self, token: Token) -> Expr:
        text = token.text
        try:
            if any(c in text for c in ".eE"):
                value = float(text)
                return DecimalLiteral(value)
            return IntegerLiteral(int(text))
        except ValueError:
            # float overflow to inf, or an integer beyond the str->int digit limit
            raise ParseError(self._offset(token.position), "a finite number", repr(text))

    def _identifier(self, token: Token) -> Expr:
        name = token.text
        if self.current.kind == "op" and self.current.text == "(":
            if not function_registry.is_registered(name):
                raise ParseError(self._offset(token.position), "a known function name", repr(name))
            self.index += 1
            self._enter()
            argument = self.expr()
            self._expect(")")
            self.depth -= 1
            return FunctionApp(name, argument)

        if name in (NamedConstantName.PI.value, NamedConstantName.E.value):
            return NamedConstant(NamedConstantName(name))
        if name == self.variable:
            return Variable(name)
        if function_registry.is_registered(name):
            raise self._fail("'(' after function name")
        raise ParseError(self._offset(token.position), f"variable {self.variable!r}", repr(name))


def parse(text: Union[str, bytes], variable: str = DEFAULT_VARIABLE) -> Expr:
    """
    Parse an answer expression.

    Raises ParseError on any token or structure violation, including names
    other than the declared variable, constants and registered functions.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(e.start, "UTF-8 text", f"byte 0x{text[e.start]:02x}")
    if variable != DEFAULT_VARIABLE:
        validate_variable_name(variable)
    result = _Parser(text, variable).parse()
    logger.debug(f"Parsed {text!r}")
    return result
