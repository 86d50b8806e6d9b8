import math

import mpmath
import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings as hsettings
from hypothesis import strategies as st

from answercheck.core.expr import DomainErrorMark, FunctionApp, IntegerLiteral, Variable, node_count
from answercheck.core.parser import parse
from answercheck.schemas import EvalBudget, EvalOutcome, ToleranceSpec, UndefinedReason
from answercheck.services.evaluation import evaluate_at, evaluate_high_precision, is_zero
from strategies import dyadic_expressions, expressions, settled_value

BIG_BUDGET = EvalBudget(max_node_visits=10**6)


class TestEvaluateAt:
    def test_polynomial(self):
        assert evaluate_at(parse("x - 5"), 12.0).value == 7.0

    def test_nested_functions(self):
        v = evaluate_at(parse("sin(cos(x))"), 0.0).value
        assert abs(v - 0.8414709848078965) <= 4 * math.ulp(0.8414709848078965)

    @pytest.mark.parametrize(
        "text, x",
        [
            ("log(x - 15)", 12.0),
            ("1/(x-2)", 2.0),
            ("sqrt(x)", -1.0),
            ("log(0*x)", 3.0),
            ("x^x", -0.5),
            ("0^(-x)", 1.0),
        ],
    )
    def test_domain_errors(self, text, x):
        assert evaluate_at(parse(text), x).reason is UndefinedReason.DOMAIN_ERROR

    @pytest.mark.parametrize(
        "text, x",
        [
            ("exp(x)", 1000.0),
            ("10^x", 400.0),
            ("x*x", 1e200),
            ("1" + "0" * 400, 1.0),
        ],
    )
    def test_overflow(self, text, x):
        assert evaluate_at(parse(text), x).reason is UndefinedReason.OVERFLOW

    def test_domain_error_mark(self):
        assert evaluate_at(DomainErrorMark(IntegerLiteral(1)), 1.0).reason is UndefinedReason.DOMAIN_ERROR

    def test_budget_exhausted(self):
        e = parse("x+x+x")  # five nodes
        assert evaluate_at(e, 1.0, EvalBudget(max_node_visits=4)).reason is UndefinedReason.BUDGET_EXHAUSTED
        assert evaluate_at(e, 1.0, EvalBudget(max_node_visits=5)).value == 3.0

    def test_visits_are_counted(self):
        assert evaluate_at(parse("sin(x)+1"), 1.0).visits == 4

    def test_long_sum_stays_within_the_budget(self):
        e = parse("+".join(["x"] * 400) + "-400*x+1")
        v = evaluate_at(e, 2.0)
        assert v.value == 1.0
        assert v.visits == node_count(e) == 805

    def test_deep_nesting_is_limited_only_by_the_budget(self):
        e = Variable("x")
        for _ in range(20_000):
            e = FunctionApp("sin", e)
        assert evaluate_at(e, 1.0, BIG_BUDGET).is_value
        assert evaluate_at(e, 1.0).reason is UndefinedReason.BUDGET_EXHAUSTED

    def test_scale_is_largest_subterm(self):
        v = evaluate_at(parse("(x+1000)-1000"), 1.0)
        assert v.value == 1.0
        assert v.scale == 1001.0

    def test_non_finite_point_is_rejected(self):
        with pytest.raises(ValueError):
            evaluate_at(parse("x"), math.nan)

    @hsettings(max_examples=100)
    @given(expressions, st.floats(min_value=-100, max_value=100), st.integers(min_value=1, max_value=200))
    def test_deterministic_and_budget_monotone(self, e, x, extra):
        first = evaluate_at(e, x, BIG_BUDGET)
        assert evaluate_at(e, x, BIG_BUDGET) == first
        if first.is_value:
            larger = EvalBudget(max_node_visits=first.visits + extra)
            assert evaluate_at(e, x, larger).value == first.value


class TestIsZero:
    def test_absolute_threshold(self):
        assert is_zero(EvalOutcome.of(0.0, 0.0), 0.0)
        assert is_zero(EvalOutcome.of(3e-16, 1.0), 1.0)
        assert not is_zero(EvalOutcome.of(1.0, 1.0), 1.0)

    def test_relative_threshold(self):
        v = EvalOutcome.of(1e-6, 1e4)
        assert is_zero(v, 1e4)
        assert not is_zero(v, 1.0)

    def test_custom_tolerance(self):
        assert is_zero(EvalOutcome.of(0.01, 1.0), 1.0, ToleranceSpec(absolute=0.1, relative=0.0))

    def test_undefined_is_rejected(self):
        with pytest.raises(ValueError):
            is_zero(EvalOutcome.undefined(UndefinedReason.OVERFLOW), 1.0)

    def test_pythagorean_identity_is_zero(self):
        e = parse("sin(x)^2+cos(x)^2-1")
        for x in np.random.default_rng(3).uniform(-50, 50, size=200).tolist():
            v = evaluate_at(e, x)
            assert is_zero(v, v.scale)


class TestOracleAgreement:
    CASES = [
        "sin(x)*exp(x/10)",
        "sqrt(x)+log(x)",
        "x^3-2*x+1",
        "exp(-x)*x^2",
        "(x+1)/(x-1)",
        "tan(x/8)",
        "pi*x+e",
        "abs(1-x)*ln(x)",
    ]

    @pytest.mark.parametrize("text", CASES)
    def test_binary64_matches_high_precision(self, text):
        e = parse(text)
        for x in np.random.default_rng(5).uniform(2.0, 10.0, size=100).tolist():
            fast = evaluate_at(e, x).value
            reference = evaluate_high_precision(e, x)
            assert reference is not None
            assert abs(fast - float(reference)) <= 1e-12 * abs(float(reference))

    def test_reference_is_none_outside_the_domain(self):
        assert evaluate_high_precision(parse("log(x)"), -1.0) is None
        assert evaluate_high_precision(parse("1/(x-2)"), 2.0) is None

    def test_reference_precision(self):
        value = evaluate_high_precision(parse("sin(x)"), 1.0, dps=50)
        with mpmath.workdps(50):
            assert abs(value - mpmath.sin(1)) < mpmath.mpf(10) ** -45

    @hsettings(
        max_examples=300,
        deadline=None,
        suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow],
    )
    @given(dyadic_expressions, st.floats(min_value=0.5, max_value=30.0))
    def test_random_trees_match_high_precision(self, e, x):
        fast = evaluate_at(e, x)
        assume(fast.is_value and fast.scale <= 1e6)
        tolerance = 1e-9 * max(fast.scale, 1.0)
        reference = settled_value(e, x, tolerance / 1000)
        assume(reference is not None)
        assert abs(fast.value - float(reference)) <= tolerance
