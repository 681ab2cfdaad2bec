import math
from fractions import Fraction

import numpy as np
import pytest

from contactjacobi.errors import ChartMismatchError, DomainError, ExpressionSyntaxError, UnknownVariableError
from contactjacobi.expression import (
    ONE,
    ZERO,
    BinOp,
    Chart,
    Const,
    Pow,
    Var,
    compile_many,
    const,
    differentiate,
    evaluate,
    evaluate_at,
    gradient,
    parse_expression,
    substitute,
    to_text,
    var,
)

QPS = Chart("extended", ("q", "p", "s"))


def ev(text, **values):
    return evaluate(parse_expression(text, QPS), QPS.point(**values))


class TestParse:
    def test_power_over_constant(self):
        e = parse_expression("p^2/2", QPS)
        assert e == BinOp("/", Pow(Var("p"), 2), Const(Fraction(2)))

    def test_single_variable(self):
        assert parse_expression("q", QPS) == Var("q")

    def test_syntax_error_column(self):
        with pytest.raises(ExpressionSyntaxError) as err:
            parse_expression("p+*q", QPS)
        assert err.value.column == 3
        assert "column 3" in str(err.value)

    @pytest.mark.parametrize("text,column", [("(p", 3), ("p)", 2), ("p^q", 3), ("sqrt p", 6), ("2 $ p", 3), ("", 1)])
    def test_syntax_error_positions(self, text, column):
        with pytest.raises(ExpressionSyntaxError) as err:
            parse_expression(text, QPS)
        assert err.value.column == column

    def test_unknown_variable_named(self):
        with pytest.raises(UnknownVariableError) as err:
            parse_expression("p + x1", QPS)
        assert err.value.name == "x1"

    def test_unary_minus_binds_tighter_than_power(self):
        assert ev("-q^2", q=3, p=0, s=0) == 9.0
        assert ev("-(q^2)", q=3, p=0, s=0) == -9.0

    def test_precedence_and_associativity(self):
        assert ev("1 - 2 - 3", q=0, p=0, s=0) == -4.0
        assert ev("8 / 4 / 2", q=0, p=0, s=0) == 1.0
        assert ev("1 + 2 * 3^2", q=0, p=0, s=0) == 19.0

    def test_integer_literals_are_exact(self):
        e = parse_expression("1/3 + 1/6", QPS)
        assert e == Const(Fraction(1, 2))

    def test_float_literals(self):
        assert ev("2.5e-1 * q", q=4, p=0, s=0) == 1.0

    def test_functions(self):
        assert ev("sqrt(p^2 + 1)", q=0, p=0, s=0) == 1.0
        assert ev("exp(log(q)) + sin(0) + cos(0)", q=2.0, p=0, s=0) == pytest.approx(3.0)

    def test_derived_symbols_are_substituted(self):
        chart = Chart("shell", ("p1",), {"m": const(2), "p0": parse_expression("sqrt(p1^2 + 4)", Chart("t", ("p1",)))})
        e = parse_expression("p0 + m", chart)
        assert e.variables() == {"p1"}
        assert evaluate_at(e, chart.coords, [0.0]) == 4.0


class TestPrint:
    @pytest.mark.parametrize("text", ["p^2/2", "-q^2 + s", "sqrt(p^2 + 1)/(q - 3)", "1/3 - 2.5*q", "exp(-s)*cos(q)",
                                      "(q - p*s)^3", "log(1 + p^2) - sin(q)/7"])
    def test_round_trip(self, text, rng):
        e = parse_expression(text, QPS)
        back = parse_expression(to_text(e), QPS)
        for x in rng.uniform(-1, 1, (20, 3)):
            x[0] = 0.5 * x[0]  # keeps q - 3 away from 0
            assert evaluate_at(back, QPS.coords, x) == evaluate_at(e, QPS.coords, x)

    def test_str_is_text(self):
        assert str(parse_expression("q*p", QPS)) == "(q * p)"


class TestDifferentiate:
    def test_power(self):
        assert evaluate(differentiate(parse_expression("p^2/2", QPS), "p"), QPS.point(q=0, p=3.5, s=0)) == 3.5

    def test_independent_coordinate_is_zero(self):
        assert differentiate(parse_expression("p^2/2", QPS), "q") == ZERO

    def test_time_derivative(self):
        d = differentiate(parse_expression("p^2*s/2", QPS), "s")
        assert d == parse_expression("p^2/2", QPS)

    def test_variable(self):
        assert differentiate(var("q"), "q") == ONE

    def test_unknown_coordinate(self):
        with pytest.raises(UnknownVariableError):
            differentiate(var("q"), "x", QPS)

    def test_gradient(self):
        g = gradient(parse_expression("q*p + s^2", QPS), QPS)
        x = [1.0, 2.0, 3.0]
        assert [evaluate_at(d, QPS.coords, x) for d in g] == [2.0, 1.0, 6.0]

    @pytest.mark.parametrize("text", ["sqrt(p^2 + q^2 + 1)", "exp(q*s)/(2 + cos(p))", "log(3 + sin(q)) * p^3",
                                      "(q - p*s)^2/(1 + s^2)", "-p^4 + q/(p^2 + 1)"])
    def test_against_central_differences(self, text, rng):
        e = parse_expression(text, QPS)
        for x in rng.uniform(-1, 1, (100, 3)):
            for i, c in enumerate(QPS.coords):
                h = 1e-5 * max(1.0, abs(x[i]))
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                fd = (evaluate_at(e, QPS.coords, xp) - evaluate_at(e, QPS.coords, xm)) / (2 * h)
                exact = evaluate_at(differentiate(e, c), QPS.coords, x)
                assert abs(exact - fd) <= 1e-6 * max(1.0, abs(exact))


class TestEvaluate:
    def test_kinetic_energy(self):
        assert ev("p^2/2", q=0, p=2, s=0) == 2.0

    def test_division_by_zero_names_subexpression(self):
        with pytest.raises(DomainError) as err:
            ev("q + 1/p", q=1, p=0, s=0)
        assert "(1 / p)" in str(err.value)
        assert err.value.subexpression == parse_expression("1/p", QPS)

    def test_sqrt_of_negative(self):
        with pytest.raises(DomainError) as err:
            ev("sqrt(q - 2)", q=1, p=0, s=0)
        assert "sqrt" in str(err.value)

    def test_log_of_zero(self):
        with pytest.raises(DomainError):
            ev("log(p)", q=1, p=0, s=0)

    def test_chart_mismatch(self):
        other = Chart("darboux", ("Q", "P", "W"))
        with pytest.raises(ChartMismatchError):
            evaluate(parse_expression("q", QPS), other.point([0, 0, 0]))

    def test_compile_many_falls_back_with_location(self):
        fn = compile_many([parse_expression("q", QPS), parse_expression("1/(q - 1)", QPS)], QPS.coords)
        assert np.allclose(fn([2.0, 0, 0]), [2.0, 1.0])
        with pytest.raises(DomainError, match="q - 1"):
            fn([1.0, 0, 0])

    def test_substitute(self):
        e = substitute(parse_expression("q*p", QPS), {"q": parse_expression("p + 1", QPS)})
        assert evaluate_at(e, QPS.coords, [9.0, 2.0, 0.0]) == 6.0


class TestChartPoint:
    def test_wrong_length(self):
        with pytest.raises(ValueError):
            QPS.point([1.0, 2.0])

    def test_non_finite(self):
        with pytest.raises(ValueError):
            QPS.point([1.0, math.nan, 0.0])

    def test_named_access(self):
        P = QPS.point(q=1, p=2, s=3)
        assert P["p"] == 2.0
        assert P.as_dict() == {"q": 1.0, "p": 2.0, "s": 3.0}
        with pytest.raises(ValueError):
            P.values[0] = 5.0
