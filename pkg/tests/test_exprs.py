import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import gen_ast
from vegaplus import exprs
from vegaplus.errors import EvalError, ExprSyntaxError, ExprTypeError
from vegaplus.exprs import Binary, Call, FieldRef, Literal, SignalRef, Unary, parse_expr, print_expr


class TestParse:
    def test_grammar_forced_shape(self):
        e = parse_expr("datum.delay > 0 && datum.delay < cutoff")
        assert e == Binary(
            "&&",
            Binary(">", FieldRef("delay"), Literal(0.0)),
            Binary("<", FieldRef("delay"), SignalRef("cutoff")),
        )

    def test_precedence_forced_shape(self):
        e = parse_expr("floor(datum.x / 10) * 10")
        assert e == Binary("*", Call("floor", (Binary("/", FieldRef("x"), Literal(10.0)),)), Literal(10.0))

    def test_regex_call(self):
        e = parse_expr("test('^Eng', datum.job)")
        assert e == Call("test", (Literal("^Eng"), FieldRef("job")))

    def test_mul_binds_tighter_than_add(self):
        assert parse_expr("1 + 2 * 3") == Binary("+", Literal(1.0), Binary("*", Literal(2.0), Literal(3.0)))

    def test_parens_respected(self):
        assert parse_expr("(1 + 2) * 3") == Binary("*", Binary("+", Literal(1.0), Literal(2.0)), Literal(3.0))

    def test_unary_chain(self):
        assert parse_expr("--3") == Unary("-", Unary("-", Literal(3.0)))
        assert parse_expr("!!true") == Unary("!", Unary("!", Literal(True)))

    def test_string_escapes(self):
        assert parse_expr(r"'a\'b\n'") == Literal("a'b\n")

    def test_lexer_error_carries_offset(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse_expr("datum.x @ 1")
        assert err.value.offset == 8

    def test_unknown_function(self):
        with pytest.raises(ExprSyntaxError, match="unknown function"):
            parse_expr("frobnicate(1)")

    def test_trailing_garbage(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("1 + 2)")


class TestPrint:
    def test_no_spurious_parens(self):
        assert print_expr(parse_expr("1 + 2 * 3")) == "1 + 2 * 3"

    def test_needed_parens_kept(self):
        assert print_expr(parse_expr("(1 + 2) * 3")) == "(1 + 2) * 3"

    def test_right_assoc_parens(self):
        assert print_expr(parse_expr("1 - (2 - 3)")) == "1 - (2 - 3)"
        assert print_expr(parse_expr("1 - 2 - 3")) == "1 - 2 - 3"

    def test_seeded_roundtrip(self):
        rng = random.Random(1234)
        for _ in range(500):
            ast = gen_ast(rng, depth=4)
            assert parse_expr(print_expr(ast)) == ast

    @settings(max_examples=200, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_hypothesis_roundtrip(self, seed):
        ast = gen_ast(random.Random(seed), depth=5)
        assert parse_expr(print_expr(ast)) == ast


class TestTypecheck:
    FIELDS = {"x": "number", "name": "string", "ok": "boolean"}
    SIGNALS = {"cutoff": "number", "needle": "string", "ext": "extent"}

    def check(self, text):
        return exprs.check_expr(parse_expr(text), self.FIELDS, self.SIGNALS)

    def test_types(self):
        assert self.check("datum.x + cutoff") == "number"
        assert self.check("datum.name == 'a'") == "boolean"
        assert self.check("test(needle, datum.name)") == "boolean"
        assert self.check("!datum.ok") == "boolean"

    @pytest.mark.parametrize(
        "text",
        [
            "datum.x + datum.name",
            "datum.missing > 1",
            "datum.ok < true",
            "nosuch + 1",
            "test(datum.x, datum.name)",
            "ext + 1",
            "min(1)",
            "!datum.x",
            "datum.name < 1",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(ExprTypeError):
            self.check(text)

    def test_bad_regex_literal_rejected(self):
        with pytest.raises(ExprTypeError, match="invalid regex"):
            self.check("test('(', datum.name)")


class TestEval:
    def test_null_propagates_through_arithmetic(self):
        cols = {"x": np.array([1.0, np.nan])}
        out = exprs.eval_expr(parse_expr("datum.x + 1"), cols, 2, {})
        assert out[0] == 2.0 and math.isnan(out[1])

    def test_division_by_zero_is_null(self):
        cols = {"x": np.array([1.0, 0.0])}
        out = exprs.eval_expr(parse_expr("1 / datum.x"), cols, 2, {})
        assert out[0] == 1.0 and math.isnan(out[1])

    def test_three_valued_logic(self):
        cols = {"a": np.array([1.0, np.nan, np.nan, 0.0]), "b": np.array([np.nan, 0.0, 1.0, np.nan])}
        land = exprs.eval_expr(parse_expr("datum.a && datum.b"), cols, 4, {})
        lor = exprs.eval_expr(parse_expr("datum.a || datum.b"), cols, 4, {})
        assert math.isnan(land[0]) and land[1] == 0.0 and math.isnan(land[2]) and land[3] == 0.0
        assert lor[0] == 1.0 and math.isnan(lor[1]) and lor[2] == 1.0 and math.isnan(lor[3])

    def test_filter_mask_keeps_only_true(self):
        cols = {"x": np.array([2.0, np.nan, 0.5])}
        mask = exprs.eval_to_mask(parse_expr("datum.x > 1"), cols, 3, {})
        assert list(mask) == [True, False, False]

    def test_regex_with_signal_pattern(self):
        col = np.array(["Engineer", "Farmer", None], dtype=object)
        out = exprs.eval_expr(parse_expr("test(needle, datum.job)"), {"job": col}, 3, {"needle": "^Eng"})
        assert out[0] == 1.0 and out[1] == 0.0 and math.isnan(out[2])

    def test_regex_on_number_is_runtime_error(self):
        col = np.array([1.0, 2.0])
        with pytest.raises(EvalError):
            exprs.eval_expr(Call("test", (Literal("^a"), FieldRef("x"))), {"x": col}, 2, {})

    def test_sqrt_of_negative_is_null(self):
        out = exprs.eval_expr(parse_expr("sqrt(datum.x)"), {"x": np.array([-4.0, 4.0])}, 2, {})
        assert math.isnan(out[0]) and out[1] == 2.0

    def test_float_modulo(self):
        out = exprs.eval_expr(parse_expr("datum.x % 2"), {"x": np.array([7.5, -7.5])}, 2, {})
        assert out[0] == 1.5 and out[1] == -1.5

    def test_scalar_only_expression(self):
        assert exprs.eval_expr(parse_expr("1 + 2 * 3"), {}, 0, {}) == 7.0
