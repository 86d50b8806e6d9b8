"""
Evaluation Service - Budgeted binary64 evaluation of expression trees.

Failures are values: every domain error, overflow or exhausted budget comes
back as an undefined EvalOutcome, never as an exception.
"""
import logging
import math
import time
from typing import Optional

import mpmath

from answercheck.core.expr import (
    Binary,
    BinaryOp,
    DecimalLiteral,
    DomainErrorMark,
    Expr,
    FunctionApp,
    IntegerLiteral,
    NamedConstant,
    NamedConstantName,
    UnaryNeg,
    Variable,
)
from answercheck.core.registry import function_registry
from answercheck.schemas import EvalBudget, EvalOutcome, ToleranceSpec, UndefinedReason

logger = logging.getLogger(__name__)


class _Undefined(Exception):
    def __init__(self, reason: UndefinedReason):
        super().__init__(reason.value)
        self.reason = reason


class _Evaluator:
    """One evaluation pass: counts node visits and tracks the magnitude scale."""

    def __init__(self, x: float, budget: EvalBudget):
        self.x = x
        self.max_visits = budget.max_node_visits
        self.deadline = (
            None if budget.wall_clock_limit_ms is None
            else time.monotonic() + budget.wall_clock_limit_ms / 1000.0
        )
        self.visits = 0
        self.scale = 0.0

    def run(self, root: Expr) -> float:
        """Post-order evaluation with an explicit stack; left operands first."""
        values: list[float] = []
        stack: list[tuple[Expr, bool]] = [(root, False)]
        while stack:
            node, ready = stack.pop()
            if ready:
                arity = len(node.children())
                operands = values[len(values) - arity:]
                del values[len(values) - arity:]
                values.append(self._record(self._combine(node, operands)))
                continue

            self._tick()
            if isinstance(node, (UnaryNeg, FunctionApp, Binary)):
                if isinstance(node, FunctionApp) and function_registry.get(node.name) is None:
                    raise _Undefined(UndefinedReason.DOMAIN_ERROR)
                stack.append((node, True))
                stack.extend((child, False) for child in reversed(node.children()))
            else:
                values.append(self._record(self._leaf(node)))
        return values[0]

    def _tick(self) -> None:
        self.visits += 1
        if self.visits > self.max_visits:
            raise _Undefined(UndefinedReason.BUDGET_EXHAUSTED)
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Undefined(UndefinedReason.BUDGET_EXHAUSTED)

    def _record(self, value: float) -> float:
        if not math.isfinite(value):
            raise _Undefined(UndefinedReason.OVERFLOW)
        self.scale = max(self.scale, abs(value))
        return value

    def _leaf(self, e: Expr) -> float:
        if isinstance(e, IntegerLiteral):
            try:
                return float(e.value)
            except OverflowError:
                raise _Undefined(UndefinedReason.OVERFLOW)
        if isinstance(e, DecimalLiteral):
            return e.value
        if isinstance(e, NamedConstant):
            return math.pi if e.name is NamedConstantName.PI else math.e
        if isinstance(e, Variable):
            return self.x
        if isinstance(e, DomainErrorMark):
            raise _Undefined(UndefinedReason.DOMAIN_ERROR)
        raise TypeError(f"Unknown expression node: {type(e).__name__}")

    def _combine(self, e: Expr, operands: list[float]) -> float:
        if isinstance(e, UnaryNeg):
            return -operands[0]
        if isinstance(e, FunctionApp):
            return self._apply(e, operands[0])
        return self._binary(e.op, *operands)

    def _apply(self, e: FunctionApp, argument: float) -> float:
        spec = function_registry.get(e.name)
        try:
            result = spec.evaluate(argument)
        except ValueError:
            raise _Undefined(UndefinedReason.DOMAIN_ERROR)
        except OverflowError:
            raise _Undefined(UndefinedReason.OVERFLOW)
        if not math.isfinite(result):
            raise _Undefined(
                UndefinedReason.DOMAIN_ERROR if spec.poles else UndefinedReason.OVERFLOW
            )
        return result

    def _binary(self, op: BinaryOp, left: float, right: float) -> float:
        if op is BinaryOp.ADD:
            return left + right
        if op is BinaryOp.SUB:
            return left - right
        if op is BinaryOp.MUL:
            return left * right
        if op is BinaryOp.DIV:
            if right == 0.0:
                raise _Undefined(UndefinedReason.DOMAIN_ERROR)
            return left / right
        try:
            return math.pow(left, right)
        except ValueError:
            # negative base with fractional exponent, or 0 to a negative power
            raise _Undefined(UndefinedReason.DOMAIN_ERROR)
        except OverflowError:
            raise _Undefined(UndefinedReason.OVERFLOW)


def evaluate_at(e: Expr, x: float, budget: Optional[EvalBudget] = None) -> EvalOutcome:
    """
    Evaluate e at x in binary64.

    Deterministic for fixed (e, x, budget) while the wall-clock limit is off.
    """
    if not math.isfinite(x):
        raise ValueError(f"Evaluation point must be finite, got {x}")
    evaluator = _Evaluator(x, budget or EvalBudget())
    try:
        value = evaluator.run(e)
    except _Undefined as undefined:
        return EvalOutcome.undefined(undefined.reason, visits=evaluator.visits)
    return EvalOutcome.of(value, evaluator.scale, visits=evaluator.visits)


def is_zero(v: EvalOutcome, f_scale: float, tol: Optional[ToleranceSpec] = None) -> bool:
    """|v| <= tol.absolute or |v| <= tol.relative * f_scale."""
    if not v.is_value:
        raise ValueError("is_zero needs a defined value")
    tol = tol or ToleranceSpec()
    magnitude = abs(v.value)
    return magnitude <= tol.absolute or magnitude <= tol.relative * f_scale


def evaluate_high_precision(e: Expr, x: float, dps: int = 40) -> Optional[mpmath.mpf]:
    """
    Reference value of e at x with mpmath at dps digits.

    Literals and x enter as their exact binary64 values. Returns None where the
    real value does not exist.
    """
    def value(node: Expr):
        if isinstance(node, IntegerLiteral):
            return mpmath.mpf(node.value)
        if isinstance(node, DecimalLiteral):
            return mpmath.mpf(node.value)
        if isinstance(node, NamedConstant):
            return +mpmath.pi if node.name is NamedConstantName.PI else +mpmath.e
        if isinstance(node, Variable):
            return mpmath.mpf(x)
        if isinstance(node, UnaryNeg):
            return -value(node.operand)
        if isinstance(node, FunctionApp):
            spec = function_registry.get(node.name)
            arg = value(node.argument)
            if (spec.name == "log" and arg <= 0) or (spec.name == "sqrt" and arg < 0):
                raise ValueError("outside the real domain")
            return spec.oracle(arg)
        if isinstance(node, Binary):
            left, right = value(node.left), value(node.right)
            if node.op is BinaryOp.ADD:
                return left + right
            if node.op is BinaryOp.SUB:
                return left - right
            if node.op is BinaryOp.MUL:
                return left * right
            if node.op is BinaryOp.DIV:
                return left / right
            return mpmath.power(left, right)
        raise ValueError(f"No real value for {type(node).__name__}")

    try:
        with mpmath.workdps(dps):
            result = value(e)
            if not isinstance(result, mpmath.mpf) or not mpmath.isfinite(result):
                return None
            return +result
    except (ValueError, TypeError, ZeroDivisionError, OverflowError) as exc:
        logger.debug(f"High-precision evaluation undefined at {x}: {exc}")
        return None
