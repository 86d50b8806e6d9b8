"""
Built-in elementary functions.

Covers sin, cos, tan, exp, natural log (ln is an alias), sqrt and abs.
log is the natural logarithm; there is no base-10 log.
"""
import math
from fractions import Fraction
from typing import Optional

import mpmath

from answercheck.core.decorators import elementary_function


def _zero_at_zero(q: Fraction) -> Optional[Fraction]:
    return Fraction(0) if q == 0 else None


def _one_at_zero(q: Fraction) -> Optional[Fraction]:
    return Fraction(1) if q == 0 else None


def _exact_log(q: Fraction) -> Optional[Fraction]:
    return Fraction(0) if q == 1 else None


def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


@elementary_function(
    name="sin",
    description="Sine",
    oracle=mpmath.sin,
    interval=lambda v: mpmath.iv.sin(v),
    exact=_zero_at_zero,
)
def sin(x: float) -> float:
    return math.sin(x)


@elementary_function(
    name="cos",
    description="Cosine",
    oracle=mpmath.cos,
    interval=lambda v: mpmath.iv.cos(v),
    exact=_one_at_zero,
)
def cos(x: float) -> float:
    return math.cos(x)


@elementary_function(
    name="tan",
    description="Tangent",
    oracle=mpmath.tan,
    interval=lambda v: mpmath.iv.tan(v),
    exact=_zero_at_zero,
    poles=True,
)
def tan(x: float) -> float:
    return math.tan(x)


@elementary_function(
    name="exp",
    description="Exponential",
    oracle=mpmath.exp,
    interval=lambda v: mpmath.iv.exp(v),
    exact=_one_at_zero,
)
def exp(x: float) -> float:
    return math.exp(x)


@elementary_function(
    name="log",
    description="Natural logarithm",
    aliases=("ln",),
    oracle=mpmath.log,
    interval=lambda v: mpmath.iv.log(v),
    exact=_exact_log,
)
def log(x: float) -> float:
    # math.log raises ValueError for x <= 0
    return math.log(x)


@elementary_function(
    name="sqrt",
    description="Square root",
    oracle=mpmath.sqrt,
    interval=lambda v: mpmath.iv.sqrt(v),
    exact=_exact_sqrt,
)
def sqrt(x: float) -> float:
    return math.sqrt(x)


@elementary_function(
    name="abs",
    description="Absolute value",
    oracle=mpmath.fabs,
    interval=lambda v: abs(v),
    exact=abs,
)
def absolute(x: float) -> float:
    return abs(x)
