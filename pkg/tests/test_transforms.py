import math
import random

import numpy as np
import pytest

from generators import gen_schema, gen_table
from vegaplus.errors import EvalError
from vegaplus.specmodel import transform_output_schema
from vegaplus.table import Table, tables_equal
from vegaplus.transforms import apply_transform, apply_transform_full, checked_transform, nice_bin_params


# ---------------------------------------------------------------------------
# Independent oracles (row-at-a-time, no numpy, no shared code paths)


def oracle_aggregate(rows, schema_names, groupby, ops):
    """Naive nested-loop aggregate with SQL null semantics."""
    idx = {n: i for i, n in enumerate(schema_names)}
    groups = []
    for row in rows:
        key = tuple(row[idx[g]] for g in groupby)
        if key not in groups:
            groups.append(key)
    if not groupby:
        groups = [()]
    out = []
    for key in groups:
        members = [r for r in rows if tuple(r[idx[g]] for g in groupby) == key]
        rec = list(key)
        for op, fld, _name in ops:
            if op == "count":
                rec.append(float(len(members)))
                continue
            vals = [r[idx[fld]] for r in members if r[idx[fld]] is not None]
            if not vals:
                rec.append(None)
            elif op == "sum":
                rec.append(float(sum(vals)))
            elif op == "mean":
                rec.append(float(sum(vals)) / len(vals))
            elif op == "min":
                rec.append(min(vals))
            else:
                rec.append(max(vals))
        out.append(tuple(rec))
    return out


def oracle_stack(rows, schema_names, groupby, sort_field, order, value_field):
    """Prefix sums per partition in sort order; ties by the remaining
    columns then original position (mirrors the documented tiebreak)."""
    import functools

    idx = {n: i for i, n in enumerate(schema_names)}

    def cmp_values(a, b, descending):
        # nulls last regardless of direction
        if a is None and b is None:
            return 0
        if a is None:
            return 1
        if b is None:
            return -1
        if a == b:
            return 0
        less = a < b
        if descending:
            less = not less
        return -1 if less else 1

    out_rows = [None] * len(rows)
    keys = sorted({tuple(r[idx[g]] for g in groupby) for r in rows}, key=lambda k: str(k))
    others = [n for n in schema_names if n not in groupby and n != sort_field]

    def compare(pa, pb):
        (ia, ra), (ib, rb) = pa, pb
        c = cmp_values(ra[idx[sort_field]], rb[idx[sort_field]], order == "descending")
        if c:
            return c
        for o in others:
            c = cmp_values(ra[idx[o]], rb[idx[o]], False)
            if c:
                return c
        return ia - ib

    for key in keys:
        members = [(i, r) for i, r in enumerate(rows) if tuple(r[idx[g]] for g in groupby) == key]
        running = 0.0
        for i, r in sorted(members, key=functools.cmp_to_key(compare)):
            v = r[idx[value_field]]
            if v is None:
                out_rows[i] = r + (None, running)
            else:
                out_rows[i] = r + (running, running + v)
                running += v
    return out_rows


# ---------------------------------------------------------------------------


class TestBinNicing:
    def test_hand_traced_0_1000_maxbins10(self):
        # span 1000, m 10: step0 = 10^2; ceil(1000/100) = 10 <= 10 -> step 100
        assert nice_bin_params(0, 1000, 10) == (0.0, 100.0)

    def test_hand_traced_irregular_span(self):
        # span 337, m 10: step0 = 10; 10 -> 34 bins, 20 -> 17, 50 -> 7 <= 10
        start, step = nice_bin_params(3, 340, 10)
        assert step == 50.0 and start == 0.0

    def test_hand_traced_multiplier_two(self):
        # span 170, m 10: step0 = 10; 10 -> 17 bins, 20 -> 9 <= 10
        assert nice_bin_params(0, 170, 10) == (0.0, 20.0)

    def test_negative_start_snaps_to_step(self):
        start, step = nice_bin_params(-43.8, 998.9, 10)
        assert step == 200.0 and start == -200.0

    def test_degenerate_span(self):
        assert nice_bin_params(5, 5, 10) == (5.0, 1.0)

    def test_null_extent(self):
        assert nice_bin_params(None, None, 10) is None

    def test_bin_values_land_in_expected_buckets(self):
        t = Table.from_columns([("v", "number")], {"v": np.arange(0.0, 1000.0, 7.0)})
        td = checked_transform("bin", {"field": "v", "extent": [0, 1000], "maxbins": 10}, [("v", "number")], {})
        out = apply_transform("bin", td.params, t)
        bin0 = sorted(set(out.column("bin0")))
        assert bin0 == [0.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0, 900.0]
        assert all(b1 - b0 == 100.0 for b0, b1 in zip(out.column("bin0"), out.column("bin1")))

    def test_null_rows_dropped_and_counted(self):
        t = Table.from_rows([("v", "number")], [(1.0,), (None,), (2.0,), (None,)])
        td = checked_transform("bin", {"field": "v", "extent": [0, 10], "maxbins": 5}, [("v", "number")], {})
        res = apply_transform_full("bin", td.params, t, {})
        assert res.table.nrows == 2
        assert res.dropped == 2


class TestAggregate:
    def test_count_no_groupby_on_42_rows(self):
        t = Table.from_columns([("x", "number")], {"x": np.arange(42.0)})
        td = checked_transform("aggregate", {"groupby": [], "ops": ["count"]}, [("x", "number")], {})
        out = apply_transform("aggregate", td.params, t)
        assert out.nrows == 1 and out.rows() == [(42.0,)]

    def test_no_groupby_on_empty_input_yields_one_row(self):
        t = Table(schema=[("x", "number")], nrows=0)
        td = checked_transform(
            "aggregate", {"groupby": [], "ops": ["count", "sum"], "fields": [None, "x"]}, [("x", "number")], {}
        )
        out = apply_transform("aggregate", td.params, t)
        assert out.rows() == [(0.0, None)]

    def test_groupby_on_empty_input_is_empty(self):
        t = Table(schema=[("x", "number"), ("g", "string")], nrows=0)
        td = checked_transform(
            "aggregate", {"groupby": ["g"], "ops": ["count"]}, [("x", "number"), ("g", "string")], {}
        )
        assert apply_transform("aggregate", td.params, t).nrows == 0

    def test_random_vs_nested_loop_oracle(self):
        rng = random.Random(21)
        for _ in range(60):
            schema = gen_schema(rng)
            t = gen_table(rng, schema, max_rows=200)
            names = [n for n, _ in schema]
            num_fields = [n for n, ty in schema if ty == "number"]
            low_card = [n for n, ty in schema if ty in ("string", "boolean")]
            groupby = rng.sample(low_card, k=min(len(low_card), rng.randint(0, 2)))
            ops = [("count", None, "count")]
            if num_fields:
                fld = rng.choice(num_fields)
                ops.append((rng.choice(["sum", "mean", "min", "max"]), fld, "agg1"))
            td = checked_transform(
                "aggregate",
                {"groupby": groupby, "ops": [o for o, _f, _n in ops], "fields": [f for _o, f, _n in ops], "as": [n for _o, _f, n in ops]},
                schema,
                {},
            )
            got = apply_transform("aggregate", td.params, t)
            want_rows = oracle_aggregate(t.rows(), names, groupby, ops)
            want = Table.from_rows(got.schema, want_rows)
            assert tables_equal(got, want), f"groupby={groupby} ops={ops}"

    def test_string_min_max(self):
        t = Table.from_rows([("s", "string")], [("b",), (None,), ("a",), ("c",)])
        td = checked_transform(
            "aggregate", {"groupby": [], "ops": ["min", "max"], "fields": ["s", "s"], "as": ["lo", "hi"]},
            [("s", "string")], {},
        )
        assert apply_transform("aggregate", td.params, t).rows() == [("a", "c")]

    def test_null_group_key_groups_together(self):
        t = Table.from_rows([("g", "number"), ("v", "number")], [(None, 1.0), (None, 2.0), (1.0, 3.0)])
        td = checked_transform(
            "aggregate", {"groupby": ["g"], "ops": ["count"]}, [("g", "number"), ("v", "number")], {}
        )
        out = apply_transform("aggregate", td.params, t)
        assert sorted(out.rows(), key=str) == [(1.0, 1.0), (None, 2.0)]


class TestStack:
    def test_prefix_sum_example(self):
        t = Table.from_rows([("g", "number"), ("v", "number")], [(1.0, 3.0), (1.0, 1.0), (1.0, 2.0)])
        td = checked_transform(
            "stack", {"groupby": ["g"], "sort": {"field": "v", "order": "ascending"}, "field": "v"},
            [("g", "number"), ("v", "number")], {},
        )
        out = apply_transform("stack", td.params, t)
        assert sorted((r[2], r[3]) for r in out.rows()) == [(0.0, 1.0), (1.0, 3.0), (3.0, 6.0)]

    def test_segments_tile_partition_totals(self, census_table):
        agg = checked_transform(
            "aggregate",
            {"groupby": ["year", "job"], "ops": ["sum"], "fields": ["people"], "as": ["count"]},
            census_table.schema,
            {},
        )
        mid = apply_transform("aggregate", agg.params, census_table)
        td = checked_transform(
            "stack", {"groupby": ["year"], "sort": {"field": "job", "order": "ascending"}, "field": "count"},
            mid.schema, {},
        )
        out = apply_transform("stack", td.params, mid)
        # rows are (year, job, count, y0, y1); per year the segments must
        # tile [0, sum(count)] without gaps
        for year in (1990.0, 2000.0):
            rows = sorted((r for r in out.rows() if r[0] == year), key=lambda r: r[3])
            total = sum(r[2] for r in rows)
            assert rows[0][3] == 0.0
            assert math.isclose(rows[-1][4], total)
            for a, b in zip(rows, rows[1:]):
                assert math.isclose(a[4], b[3])

    def test_random_vs_prefix_sum_oracle(self):
        rng = random.Random(31)
        for _ in range(60):
            schema = gen_schema(rng)
            t = gen_table(rng, schema, max_rows=120)
            names = [n for n, _ in schema]
            num_fields = [n for n, ty in schema if ty == "number"]
            low_card = [n for n, ty in schema if ty in ("string", "boolean")]
            groupby = [rng.choice(low_card)] if low_card and rng.random() < 0.7 else []
            sort_field = rng.choice(names)
            order = rng.choice(["ascending", "descending"])
            value = rng.choice(num_fields)
            td = checked_transform(
                "stack", {"groupby": groupby, "sort": {"field": sort_field, "order": order}, "field": value},
                schema, {},
            )
            got = apply_transform("stack", td.params, t)
            want_rows = oracle_stack(t.rows(), names, groupby, sort_field, order, value)
            want = Table.from_rows(got.schema, want_rows)
            assert tables_equal(got, want), f"groupby={groupby} sort={sort_field} {order} value={value}"


class TestOthers:
    def test_filter_keeps_only_exact_true(self):
        t = Table.from_rows([("x", "number")], [(2.0,), (None,), (0.5,)])
        td = checked_transform("filter", {"expr": "datum.x > 1"}, [("x", "number")], {})
        assert apply_transform("filter", td.params, t).rows() == [(2.0,)]

    def test_formula_adds_column(self):
        t = Table.from_rows([("x", "number")], [(7.0,), (None,)])
        td = checked_transform("formula", {"expr": "floor(datum.x / 2) * 2", "as": "even"}, [("x", "number")], {})
        out = apply_transform("formula", td.params, t)
        assert out.schema == [("x", "number"), ("even", "number")]
        assert out.rows() == [(7.0, 6.0), (None, None)]

    def test_formula_overwrites_in_place(self):
        t = Table.from_rows([("x", "number"), ("y", "number")], [(1.0, 2.0)])
        td = checked_transform("formula", {"expr": "datum.x + 1", "as": "x"}, t.schema, {})
        out = apply_transform("formula", td.params, t)
        assert out.schema[0] == ("x", "number")
        assert out.rows() == [(2.0, 2.0)]

    def test_extent_ignores_nulls_and_publishes_signal(self):
        t = Table.from_rows([("v", "number")], [(5.0,), (None,), (-2.0,)])
        td = checked_transform("extent", {"field": "v", "signal": "e"}, [("v", "number")], {})
        res = apply_transform_full("extent", td.params, t, {})
        assert res.table.rows() == [(-2.0, 5.0)]
        assert res.signal == ("e", (-2.0, 5.0))

    def test_extent_empty_input(self):
        t = Table(schema=[("v", "number")], nrows=0)
        td = checked_transform("extent", {"field": "v", "signal": "e"}, [("v", "number")], {})
        res = apply_transform_full("extent", td.params, t, {})
        assert res.signal == ("e", (None, None))
        assert res.table.rows() == [(None, None)]

    def test_collect_stable_ties_keep_original_order(self):
        rows = [(1.0, "first"), (0.0, "a"), (1.0, "second"), (None, "null"), (1.0, "third")]
        t = Table.from_rows([("k", "number"), ("tag", "string")], rows)
        td = checked_transform("collect", {"sort": {"field": "k", "order": "ascending"}}, t.schema, {})
        out = apply_transform("collect", td.params, t)
        assert [r[1] for r in out.rows()] == ["a", "first", "second", "third", "null"]

    def test_collect_descending_nulls_still_last(self):
        t = Table.from_rows([("k", "number")], [(1.0,), (None,), (3.0,)])
        td = checked_transform("collect", {"sort": {"field": "k", "order": "descending"}}, t.schema, {})
        assert apply_transform("collect", td.params, t).rows() == [(3.0,), (1.0,), (None,)]

    def test_collect_string_descending(self):
        t = Table.from_rows([("s", "string")], [("a",), ("c",), (None,), ("b",)])
        td = checked_transform("collect", {"sort": {"field": "s", "order": "descending"}}, t.schema, {})
        assert apply_transform("collect", td.params, t).rows() == [("c",), ("b",), ("a",), (None,)]

    def test_project_subset_and_order(self):
        t = Table.from_rows([("a", "number"), ("b", "string"), ("c", "number")], [(1.0, "x", 2.0)])
        td = checked_transform("project", {"fields": ["c", "a"]}, t.schema, {})
        out = apply_transform("project", td.params, t)
        assert out.schema == [("c", "number"), ("a", "number")]
        assert out.rows() == [(2.0, 1.0)]

    def test_project_missing_field_raises(self):
        t = Table.from_rows([("a", "number")], [(1.0,)])
        with pytest.raises(EvalError, match="missing"):
            apply_transform("project", {"fields": ["zz"]}, t)

    def test_repeated_evaluation_is_identical(self):
        rng = random.Random(3)
        t = gen_table(rng, [("k", "number"), ("s", "string"), ("v", "number")], max_rows=100)
        td = checked_transform(
            "stack", {"groupby": ["s"], "sort": {"field": "k", "order": "ascending"}, "field": "v"}, t.schema, {}
        )
        out1 = apply_transform("stack", td.params, t)
        out2 = apply_transform("stack", td.params, t)
        assert out1.to_csv() == out2.to_csv()
