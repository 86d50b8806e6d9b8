"""
Symbolic Stage - Rewrite-based normalizer and three-valued comparator.

Expressions are brought into a canonical sum of products

    c_1 * b_11^n_11 * b_12^n_12 ... + c_2 * ... + c_0

with exact rational coefficients, non-zero integer exponents and bases drawn
from: the variable, pi, e, function applications with normalized arguments,
opaque powers, domain-error marks and monic multi-term sums. Equal normal
forms denote the same function; anything the rule set cannot settle is
Verdict.UNKNOWN and goes to the pointwise stage.
"""
import logging
import threading
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Optional

import mpmath

from answercheck.core.expr import (
    Add,
    Binary,
    BinaryOp,
    DecimalLiteral,
    Div,
    DomainErrorMark,
    E,
    Expr,
    FunctionApp,
    IntegerLiteral,
    Mul,
    NamedConstant,
    NamedConstantName,
    Pow,
    UnaryNeg,
    Variable,
    difference,
    free_variables,
)
from answercheck.core.registry import function_registry
from answercheck.schemas import Verdict

logger = logging.getLogger(__name__)

Monomial = tuple[tuple[Expr, int], ...]
Poly = dict[Monomial, Fraction]

# Products whose expansion would exceed this many terms abandon normalization
MAX_TERMS = 512

# Bit size cap for exact rational powers such as 3^100000
MAX_POWER_BITS = 1 << 16

# Emitted integer literals stay below the str() digit limit of int
MAX_LITERAL_BITS = 12_000

_INTERVAL_DPS = 30
_INTERVAL_LOCK = threading.Lock()

_BINARY_RANK = {
    BinaryOp.ADD: 6,
    BinaryOp.SUB: 7,
    BinaryOp.MUL: 8,
    BinaryOp.DIV: 9,
    BinaryOp.POW: 10,
}


class _ExpansionLimit(Exception):
    pass


# =============================================================================
# Canonical ordering
# =============================================================================

@lru_cache(maxsize=8192)
def sort_key(e: Expr) -> tuple:
    """Total order on trees: node kind, then children, then literal value."""
    if isinstance(e, IntegerLiteral):
        return (0, e.value)
    if isinstance(e, DecimalLiteral):
        return (1, e.value)
    if isinstance(e, NamedConstant):
        return (2, e.name.value)
    if isinstance(e, Variable):
        return (3, e.name)
    if isinstance(e, FunctionApp):
        return (4, sort_key(e.argument), e.name)
    if isinstance(e, UnaryNeg):
        return (5, sort_key(e.operand))
    if isinstance(e, Binary):
        return (_BINARY_RANK[e.op], sort_key(e.left), sort_key(e.right))
    if isinstance(e, DomainErrorMark):
        return (11, sort_key(e.operand))
    raise TypeError(f"Unknown expression node: {type(e).__name__}")


def _monomial_key(mono: Monomial) -> tuple:
    return tuple((sort_key(base), exponent) for base, exponent in mono)


# =============================================================================
# Polynomial arithmetic over opaque bases
# =============================================================================

def _const(q) -> Poly:
    q = Fraction(q)
    return {(): q} if q else {}


def _atom(e: Expr) -> Poly:
    return {((e, 1),): Fraction(1)}


def _constant_value(p: Poly) -> Optional[Fraction]:
    if not p:
        return Fraction(0)
    if len(p) == 1 and () in p:
        return p[()]
    return None


def _is_sum(base: Expr) -> bool:
    return isinstance(base, Binary) and base.op is BinaryOp.ADD


def _merge(left: Monomial, right: Monomial) -> Monomial:
    exponents: dict[Expr, int] = dict(left)
    for base, n in right:
        exponents[base] = exponents.get(base, 0) + n
    return tuple(sorted(
        ((base, n) for base, n in exponents.items() if n),
        key=lambda item: sort_key(item[0]),
    ))


def _add_term(poly: Poly, mono: Monomial, coeff: Fraction) -> None:
    """Accumulate coeff*mono; a sum base left at exponent 1 is distributed."""
    if not coeff:
        return
    for i, (base, n) in enumerate(mono):
        if n == 1 and _is_sum(base):
            rest = mono[:i] + mono[i + 1:]
            for inner, c in _to_poly(base).items():
                _add_term(poly, _merge(rest, inner), coeff * c)
            return
    total = poly.get(mono, Fraction(0)) + coeff
    if total:
        poly[mono] = total
    else:
        poly.pop(mono, None)


def _add(p: Poly, q: Poly, sign: int = 1) -> Poly:
    result = dict(p)
    for mono, c in q.items():
        _add_term(result, mono, sign * c)
    return result


def _scale(p: Poly, factor: Fraction) -> Poly:
    return {mono: c * factor for mono, c in p.items()} if factor else {}


def _mul(p: Poly, q: Poly) -> Poly:
    if len(p) * len(q) > MAX_TERMS:
        raise _ExpansionLimit
    result: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            _add_term(result, _merge(m1, m2), c1 * c2)
    if len(result) > MAX_TERMS:
        raise _ExpansionLimit
    return result


def _power_fits(c: Fraction, n: int) -> bool:
    if c in (1, -1):
        return True
    bits = abs(c.numerator).bit_length() + c.denominator.bit_length()
    return bits * abs(n) <= MAX_POWER_BITS


def _monic(p: Poly) -> tuple[Expr, Fraction]:
    """Split a multi-term sum into (emitted sum with leading coefficient 1, that coefficient)."""
    lead = _ordered_monomials(p)[0]
    lc = p[lead]
    return _emit(_scale(p, 1 / lc)), lc


def _int_power(p: Poly, n: int) -> Optional[Poly]:
    """p^n for integer n; None when the result is kept as an opaque power."""
    if n == 0:
        return _const(1)
    if n == 1:
        return p
    if len(p) == 1:
        (mono, c), = p.items()
        if not _power_fits(c, n):
            return None
        result: Poly = {}
        _add_term(result, tuple((base, e * n) for base, e in mono), c ** n)
        return result
    base, lc = _monic(p)
    if not _power_fits(lc, n):
        return None
    result = {}
    _add_term(result, ((base, n),), lc ** n)
    return result


def _function_poly(name: str, argument: Poly) -> Poly:
    spec = function_registry.get(name)
    canonical = spec.name if spec else name
    q = _constant_value(argument)
    if spec and spec.exact and q is not None:
        value = spec.exact(q)
        if value is not None:
            return _const(value)
    return _atom(FunctionApp(canonical, _emit(argument)))


def _opaque_power(base: Poly, exponent: Poly) -> Poly:
    return _atom(Pow(_emit(base), _emit(exponent)))


def _power_poly(node: Binary) -> Poly:
    base = _to_poly(node.left)
    exponent = _to_poly(node.right)

    q = _constant_value(exponent)
    if q is not None and q.denominator == 1:
        n = q.numerator
        if not base and n < 0:
            return _atom(DomainErrorMark(node))
        if not base:
            return _const(1) if n == 0 else {}
        result = _int_power(base, n)
        return result if result is not None else _opaque_power(base, exponent)

    a = _constant_value(base)
    if a is not None and a > 0:
        if a == 1:
            return _const(1)
        # a^y = exp(y*log(a))
        return _function_poly("exp", _mul(exponent, _function_poly("log", _const(a))))
    if base == _atom(E):
        return _function_poly("exp", exponent)
    return _opaque_power(base, exponent)


def _spine(e: Binary, ops: tuple[BinaryOp, ...]) -> tuple[Expr, list[Binary]]:
    """Walk a left-nested chain of ops without recursion."""
    links = []
    node = e
    while isinstance(node, Binary) and node.op in ops:
        links.append(node)
        node = node.left
    links.reverse()
    return node, links


def _to_poly(e: Expr) -> Poly:
    if isinstance(e, IntegerLiteral):
        return _const(e.value)
    if isinstance(e, DecimalLiteral):
        return _const(Fraction(repr(e.value)))
    if isinstance(e, (NamedConstant, Variable, DomainErrorMark)):
        return _atom(e)
    if isinstance(e, UnaryNeg):
        return _scale(_to_poly(e.operand), Fraction(-1))
    if isinstance(e, FunctionApp):
        return _function_poly(e.name, _to_poly(e.argument))
    if not isinstance(e, Binary):
        raise TypeError(f"Unknown expression node: {type(e).__name__}")

    if e.op in (BinaryOp.ADD, BinaryOp.SUB):
        head, links = _spine(e, (BinaryOp.ADD, BinaryOp.SUB))
        result = _to_poly(head)
        for link in links:
            result = _add(result, _to_poly(link.right), 1 if link.op is BinaryOp.ADD else -1)
        return result

    if e.op in (BinaryOp.MUL, BinaryOp.DIV):
        head, links = _spine(e, (BinaryOp.MUL, BinaryOp.DIV))
        result = _to_poly(head)
        for link in links:
            right = _to_poly(link.right)
            if link.op is BinaryOp.MUL:
                result = _mul(result, right)
            elif not right:
                # division by zero: keep the offending subtree as-is
                result = _atom(DomainErrorMark(link))
            else:
                inverse = _int_power(right, -1)
                if inverse is None:
                    result = _atom(Div(_emit(result), _emit(right)))
                else:
                    result = _mul(result, inverse)
        return result

    return _power_poly(e)


# =============================================================================
# Emission
# =============================================================================

def _ordered_monomials(p: Poly) -> list[Monomial]:
    ordered = sorted((mono for mono in p if mono), key=_monomial_key)
    if () in p:
        ordered.append(())
    return ordered


def _rational(q: Fraction) -> Expr:
    if max(q.numerator.bit_length(), q.denominator.bit_length()) > MAX_LITERAL_BITS:
        raise _ExpansionLimit
    if q.denominator == 1:
        return IntegerLiteral(q.numerator)
    return Div(IntegerLiteral(q.numerator), IntegerLiteral(q.denominator))


def _emit_factor(base: Expr, n: int) -> Expr:
    if n == 1:
        return base
    if n > 0:
        return Pow(base, IntegerLiteral(n))
    return Pow(base, UnaryNeg(IntegerLiteral(-n)))


def _emit_term(mono: Monomial, magnitude: Fraction) -> Expr:
    factors = [_emit_factor(base, n) for base, n in mono]
    if not factors:
        return _rational(magnitude)
    if magnitude != 1:
        factors.insert(0, _rational(magnitude))
    return reduce(Mul, factors)


def _emit(p: Poly) -> Expr:
    if not p:
        return IntegerLiteral(0)
    result = None
    for mono in _ordered_monomials(p):
        c = p[mono]
        term = _emit_term(mono, abs(c))
        if c < 0:
            term = UnaryNeg(term)
        result = term if result is None else Add(result, term)
    return result


# =============================================================================
# Public API
# =============================================================================

def normalize(e: Expr) -> Expr:
    """
    Rewrite e into its canonical form.

    Never fails: an expression too large to expand is returned unchanged.
    """
    try:
        result = _emit(_to_poly(e))
    except (_ExpansionLimit, RecursionError):
        logger.debug("Normalization abandoned: expression too large")
        return e
    logger.debug(f"normalize: {e} -> {result}")
    return result


def _interval_leaf(e: Expr):
    iv = mpmath.iv
    if isinstance(e, IntegerLiteral):
        return iv.mpf(e.value)
    if isinstance(e, DecimalLiteral):
        return iv.mpf(repr(e.value))
    if isinstance(e, NamedConstant):
        return iv.pi if e.name is NamedConstantName.PI else iv.e
    raise ValueError(f"Cannot enclose {type(e).__name__}")


def _interval_join(e: Expr, operands: list):
    if isinstance(e, UnaryNeg):
        return -operands[0]
    if isinstance(e, FunctionApp):
        spec = function_registry.get(e.name)
        if spec is None or spec.interval is None:
            raise ValueError(f"No interval implementation for {e.name}")
        return spec.interval(operands[0])
    left, right = operands
    if e.op is BinaryOp.ADD:
        return left + right
    if e.op is BinaryOp.SUB:
        return left - right
    if e.op is BinaryOp.MUL:
        return left * right
    if e.op is BinaryOp.DIV:
        return left / right
    return left ** right


def _interval(root: Expr):
    """Interval enclosure of a variable-free tree, evaluated with an explicit stack."""
    values: list = []
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, ready = stack.pop()
        if ready:
            arity = len(node.children())
            operands = values[len(values) - arity:]
            del values[len(values) - arity:]
            values.append(_interval_join(node, operands))
        elif isinstance(node, (UnaryNeg, FunctionApp, Binary)):
            stack.append((node, True))
            stack.extend((child, False) for child in reversed(node.children()))
        else:
            values.append(_interval_leaf(node))
    return values[0]


def certified_nonzero(e: Expr) -> bool:
    """True when a variable-free expression provably differs from zero."""
    if free_variables(e):
        return False
    # mpmath.iv precision is global state shared by concurrent checks
    with _INTERVAL_LOCK:
        saved = mpmath.iv.dps
        mpmath.iv.dps = _INTERVAL_DPS
        try:
            enclosure = _interval(e)
            return (enclosure > 0) is True or (enclosure < 0) is True
        except (ArithmeticError, ValueError) as exc:
            logger.warning(f"Interval certification skipped for {e}: {exc}")
            return False
        finally:
            mpmath.iv.dps = saved


def symbolic_compare(a: Expr, b: Expr) -> Verdict:
    """
    Decide a == b by normalizing a - b.

    EQUAL only for a literal-zero normal form, NOT_EQUAL only for a constant
    proven nonzero; otherwise UNKNOWN. Raises VariableMismatchError when the
    sides use different variables.
    """
    diff = difference(a, b)
    try:
        poly = _to_poly(diff)
    except (_ExpansionLimit, RecursionError):
        logger.info("Symbolic stage: expression too large, verdict unknown")
        return Verdict.UNKNOWN

    if not poly:
        verdict = Verdict.EQUAL
    elif _constant_value(poly) is not None:
        verdict = Verdict.NOT_EQUAL
    else:
        try:
            nonzero = certified_nonzero(_emit(poly))
        except _ExpansionLimit:
            nonzero = False
        verdict = Verdict.NOT_EQUAL if nonzero else Verdict.UNKNOWN

    logger.info(f"Symbolic stage: {verdict.value}")
    return verdict
