import math

import pytest
from hypothesis import given, settings as hsettings

from answercheck.core.exceptions import VariableMismatchError
from answercheck.core.expr import (
    Add,
    DecimalLiteral,
    FunctionApp,
    IntegerLiteral,
    Mul,
    Pow,
    Sub,
    UnaryNeg,
    Variable,
    difference,
    format_expr,
    free_variables,
    node_count,
    walk,
)
from answercheck.core.parser import parse
from answercheck.schemas import EvalBudget
from answercheck.services.evaluation import evaluate_at
from strategies import X, expressions

ONE = IntegerLiteral(1)
TWO = IntegerLiteral(2)


class TestLiterals:
    def test_integer_literals_hold_magnitudes(self):
        with pytest.raises(ValueError):
            IntegerLiteral(-1)

    def test_decimal_literals_are_finite(self):
        with pytest.raises(ValueError):
            DecimalLiteral(math.inf)

    def test_nodes_are_hashable_and_structural(self):
        assert Add(X, ONE) == Add(Variable("x"), IntegerLiteral(1))
        assert len({Add(X, ONE), Add(X, ONE)}) == 1


class TestFormat:
    @pytest.mark.parametrize(
        "expr, text",
        [
            (Pow(TWO, X), "2^x"),
            (Add(X, ONE), "x+1"),
            (UnaryNeg(Add(X, ONE)), "-(x+1)"),
            (Sub(X, Sub(X, ONE)), "x-(x-1)"),
            (Sub(Sub(X, X), ONE), "x-x-1"),
            (Pow(Pow(X, TWO), IntegerLiteral(3)), "(x^2)^3"),
            (Pow(X, Pow(TWO, IntegerLiteral(3))), "x^2^3"),
            (Mul(UnaryNeg(X), X), "-x*x"),
            (Pow(UnaryNeg(X), TWO), "(-x)^2"),
            (Pow(X, UnaryNeg(ONE)), "x^-1"),
            (FunctionApp("sin", Mul(TWO, X)), "sin(2*x)"),
            (DecimalLiteral(0.5), "0.5"),
        ],
    )
    def test_minimal_parentheses(self, expr, text):
        assert format_expr(expr) == text
        assert str(expr) == text

    def test_long_sum_round_trips(self):
        text = "+".join(f"sin({i}*x)" for i in range(1, 1201))
        e = parse(text)
        assert format_expr(e) == text
        assert str(parse(format_expr(e))) == text

    def test_deeply_nested_tree(self):
        e = X
        for _ in range(5000):
            e = FunctionApp("sin", e)
        assert format_expr(e) == "sin(" * 5000 + "x" + ")" * 5000


class TestDifference:
    def test_builds_unsimplified_subtraction(self):
        f = difference(parse("2^x"), parse("e^(x*log(2))"))
        assert str(f) == "2^x-e^(x*log(2))"

    def test_identical_inputs_are_not_simplified(self):
        assert difference(X, X) == Sub(X, X)

    def test_constant_side(self):
        assert str(difference(parse("sin(x)"), parse("0"))) == "sin(x)-0"

    def test_variable_mismatch(self):
        with pytest.raises(VariableMismatchError):
            difference(parse("x"), parse("t", variable="t"))

    @hsettings(max_examples=200)
    @given(expressions, expressions)
    def test_difference_evaluates_to_the_difference(self, a, b):
        budget = EvalBudget(max_node_visits=10**6)
        f = evaluate_at(difference(a, b), 3.25, budget)
        va, vb = evaluate_at(a, 3.25, budget), evaluate_at(b, 3.25, budget)
        if f.is_value:
            assert va.is_value and vb.is_value
            assert f.value == va.value - vb.value
        else:
            assert not (va.is_value and vb.is_value) or not math.isfinite(va.value - vb.value)


class TestTraversal:
    def test_walk_is_preorder(self):
        e = parse("sin(x)+2")
        kinds = [type(node).__name__ for node in walk(e)]
        assert kinds == ["Binary", "FunctionApp", "Variable", "IntegerLiteral"]

    def test_node_count(self):
        assert node_count(parse("-sin(x)*cos(cos(x))")) == 7

    def test_free_variables(self):
        assert free_variables(parse("x*sin(x)+pi")) == {"x"}
        assert free_variables(parse("pi*e")) == set()
