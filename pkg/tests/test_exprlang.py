import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradsoliton.exprlang import (
    Binary,
    Const,
    DomainError,
    ExprSyntaxError,
    Pow,
    SourceSpan,
    Unary,
    Var,
    compile_batch,
    derivative_table,
    differentiate,
    evaluate,
    evaluate_batch,
    normalize,
    parse_expr,
    to_text,
)
from strategies import DIM, any_exprs, points, smooth_exprs


class TestParse:
    def test_sum_of_squares(self):
        assert parse_expr("x1^2 + x2^2", 2) == Binary("add", Pow(Var(0), 2.0), Pow(Var(1), 2.0))

    def test_exp_call(self):
        assert parse_expr("exp(2*x1)", 1) == Unary("exp", Binary("mul", Const(2.0), Var(0)))

    def test_index_out_of_range(self):
        with pytest.raises(ExprSyntaxError, match="out of range") as info:
            parse_expr("x3", 2)
        assert info.value.span == SourceSpan(0, 2)

    def test_precedence(self):
        # ^ binds tighter than unary minus, which binds tighter than * /
        assert evaluate(parse_expr("-2^2", 1), [0]) == -4
        assert evaluate(parse_expr("2*3^2 - 8/4/2", 1), [0]) == 17
        assert evaluate(parse_expr("1 - 2 - 3", 1), [0]) == -4
        assert evaluate(parse_expr("2^-1", 1), [0]) == 0.5

    def test_aliases_and_constants(self):
        e = parse_expr("x + y*z - t + pi", 4)
        assert evaluate(e, [1, 2, 3, 4]) == pytest.approx(3 + math.pi)
        assert parse_expr("e", 1) == Const(math.e)

    def test_custom_names(self):
        e = parse_expr("r * sin(theta)", 2, ["r", "theta"])
        assert evaluate(e, [2, math.pi / 2]) == pytest.approx(2)

    def test_custom_names_replace_aliases(self):
        assert parse_expr("x1 * theta", 2, ["r", "theta"]) == parse_expr("x1 * x2", 2)
        with pytest.raises(ExprSyntaxError, match="unknown identifier"):
            parse_expr("x", 2, ["r", "theta"])

    def test_double_star_power(self):
        assert parse_expr("x1**3", 1) == parse_expr("x1^3", 1)

    @pytest.mark.parametrize(
        "text, dim, message, start",
        [
            ("x1 + * 2", 2, "unexpected", 5),
            ("foo(x1)", 1, "unknown function", 0),
            ("x1 + w", 1, "unknown identifier", 5),
            ("x1^x2", 2, "constant", 3),
            ("(x1 + 1", 1, "expected", 7),
            ("x1 $ 2", 1, "unexpected", 3),
            ("", 1, "unexpected", 0),
        ],
    )
    def test_errors_carry_spans(self, text, dim, message, start):
        with pytest.raises(ExprSyntaxError, match=message) as info:
            parse_expr(text, dim)
        span = info.value.span
        assert span.start == start
        assert 0 <= span.start <= span.end <= len(text.encode())

    def test_line_column_on_later_line(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse_expr("x1 +\n  )", 1)
        assert (info.value.line, info.value.column) == (2, 3)

    def test_span_rejects_inverted_range(self):
        with pytest.raises(ValueError):
            SourceSpan(3, 2)


class TestDifferentiate:
    def test_polynomial(self):
        d = differentiate(parse_expr("x1^2 + x2^2", 2), 0)
        assert normalize(d) == normalize(parse_expr("2*x1", 2))

    def test_chain_rule(self):
        d = differentiate(parse_expr("exp(2*x1)", 1), 0)
        assert evaluate(d, [0.3]) == pytest.approx(2 * math.exp(0.6), rel=1e-15)
        assert to_text(d) == "2 * exp(2 * x1)"

    def test_independent_variable_gives_zero_node(self):
        assert differentiate(parse_expr("x1^2", 2), 1) == Const(0.0)

    def test_constant_gives_zero_node(self):
        assert differentiate(parse_expr("3*pi + 2", 2), 0) == Const(0.0)

    @pytest.mark.parametrize(
        "text, x, expected",
        [
            ("ln(x1)", 2.0, 0.5),
            ("sqrt(x1)", 4.0, 0.25),
            ("tan(x1)", 0.0, 1.0),
            ("sinh(x1)", 0.0, 1.0),
            ("cosh(x1)", 0.0, 0.0),
            ("tanh(x1)", 0.0, 1.0),
            ("1/x1", 2.0, -0.25),
            ("x1^(-2)", 1.0, -2.0),
            ("cos(x1)", math.pi / 2, -1.0),
        ],
    )
    def test_elementary_rules(self, text, x, expected):
        assert evaluate(differentiate(parse_expr(text, 1), 0), [x]) == pytest.approx(expected, abs=1e-15)


class TestDerivativeTable:
    def test_bilinear(self):
        t = derivative_table(parse_expr("x1*x2", 2), 2)
        assert evaluate(t[(0, 1)], [0.3, 0.7]) == 1
        assert t[(0, 0)] == Const(0.0)

    def test_constant(self):
        t = derivative_table(parse_expr("5", 2), 4, 2)
        assert t[()] == Const(5.0)
        assert all(e == Const(0.0) for k, e in t.items() if k)
        # all multisets of size <= 4 over 2 indices: 1 + 2 + 3 + 4 + 5
        assert len(t) == 15

    def test_exp_fixed_point(self):
        t = derivative_table(parse_expr("exp(x1)", 2), 4)
        for order in range(5):
            assert evaluate(t[(0,) * order], [0.4, 0.0]) == pytest.approx(math.exp(0.4), rel=1e-15)

    def test_rejects_order_five(self):
        with pytest.raises(ValueError):
            derivative_table(parse_expr("x1", 1), 5)


class TestEvaluate:
    def test_arithmetic(self):
        assert evaluate(parse_expr("x1^2 + x2^2", 2), [3, 4]) == 25

    def test_exp_at_zero(self):
        assert evaluate(parse_expr("exp(2*x1)", 1), [0]) == 1

    @pytest.mark.parametrize("text, p", [("sqrt(x1)", [-1]), ("ln(x1)", [0]), ("1/x1", [0]), ("x1^(-1)", [0]), ("x1^0.5", [-2])])
    def test_domain_errors(self, text, p):
        with pytest.raises(DomainError) as info:
            evaluate(parse_expr(text, 1), p)
        assert info.value.point == tuple(float(v) for v in p)

    def test_domain_error_names_subexpression(self):
        with pytest.raises(DomainError) as info:
            evaluate(parse_expr("x2 + ln(x1 - 1)", 2), [0.5, 0])
        assert to_text(info.value.subexpr) == "ln(x1 - 1)"

    def test_batch_matches_scalar(self, rng):
        e = parse_expr("sin(x1)*exp(x2) / (2 + cos(x1*x2)) + x1^3", 2)
        pts = rng.uniform(-2, 2, size=(50, 2))
        batch = evaluate_batch(e, pts)
        # numpy and libm transcendental kernels may differ in the last ulp
        np.testing.assert_allclose(batch, [evaluate(e, p) for p in pts], rtol=1e-14, atol=0)

    def test_batch_reports_domain_error(self):
        run = compile_batch([parse_expr("ln(x1)", 1)])
        with pytest.raises(DomainError):
            run(np.array([[1.0], [-1.0]]))

    def test_wrong_point_length(self):
        with pytest.raises(ValueError):
            evaluate(parse_expr("x1 + x2", 2), [1.0])


class TestProperties:
    @settings(max_examples=300)
    @given(any_exprs(8))
    def test_print_parse_round_trip(self, e):
        text = to_text(e)
        assert normalize(parse_expr(text, DIM)) == normalize(e)

    @settings(max_examples=150)
    @given(smooth_exprs(4), points, st.integers(0, DIM - 1), st.integers(0, DIM - 1))
    def test_clairaut(self, e, p, i, j):
        a = evaluate(differentiate(differentiate(e, i), j), p)
        b = evaluate(differentiate(differentiate(e, j), i), p)
        # relative measure with a unit floor: both sides may vanish exactly
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))

    @settings(max_examples=150)
    @given(smooth_exprs(4), points, st.integers(0, DIM - 1))
    def test_matches_central_difference(self, e, p, i):
        h = 1e-5
        exact = evaluate(differentiate(e, i), p)
        up, down = list(p), list(p)
        up[i] += h
        down[i] -= h
        fd = (evaluate(e, up) - evaluate(e, down)) / (2 * h)
        assert abs(exact - fd) <= 1e-6 * (1 + abs(exact))

    @settings(max_examples=100)
    @given(smooth_exprs(3))
    def test_table_entries_are_symmetric(self, e):
        t = derivative_table(e, 3, DIM)
        p = [0.3, -0.7, 1.1]
        for key, expr in t.items():
            assert key == tuple(sorted(key))
            v = evaluate(expr, p)
            if len(key) >= 1:
                # permuted differentiation order evaluates identically
                alt = e
                for k in reversed(key):
                    alt = differentiate(alt, k)
                w = evaluate(alt, p)
                assert abs(v - w) <= 1e-12 * max(1.0, abs(v))

    @settings(max_examples=100)
    @given(any_exprs(6))
    def test_normalize_is_idempotent(self, e):
        once = normalize(e)
        assert normalize(once) == once
        assert hash(once) == hash(normalize(once))
