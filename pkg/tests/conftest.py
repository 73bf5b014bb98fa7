from __future__ import annotations

import json

import numpy as np
import pytest

from vegaplus.drivers import EmbeddedDriver
from vegaplus.table import Table

FLIGHTS_SPEC = {
    "vegaplus_version": 1,
    "data": [
        {"name": "flights", "table": "flights", "schema": {"delay": "number", "distance": "number"}},
        {
            "name": "binned",
            "source": "flights",
            "transform": [
                {"type": "extent", "field": "delay", "signal": "delay_extent"},
                {"type": "bin", "field": "delay", "extent": {"signal": "delay_extent"}, "maxbins": {"signal": "maxbins"}},
                {"type": "aggregate", "groupby": ["bin0", "bin1"], "ops": ["count"], "as": ["count"]},
            ],
        },
    ],
    "signals": [{"name": "maxbins", "value": 10, "bind": {"input": "range", "min": 5, "max": 40, "step": 5}}],
    "marks": [{"type": "rect", "from": {"data": "binned"}, "encoding": {"x": "bin0", "x2": "bin1", "y": "count"}}],
}

CENSUS_SPEC = {
    "vegaplus_version": 1,
    "data": [
        {
            "name": "census",
            "table": "census",
            "schema": {"year": "number", "sex": "string", "job": "string", "people": "number"},
        },
        {
            "name": "stacked",
            "source": "census",
            "transform": [
                {"type": "filter", "expr": "(gender == 'all' || datum.sex == gender) && test(job_search, datum.job)"},
                {"type": "aggregate", "groupby": ["year", "job"], "ops": ["sum"], "fields": ["people"], "as": ["count"]},
                {"type": "stack", "groupby": ["year"], "sort": {"field": "job", "order": "ascending"}, "field": "count"},
            ],
        },
    ],
    "signals": [
        {"name": "gender", "value": "all", "bind": {"input": "radio", "options": ["all", "male", "female"]}},
        {"name": "job_search", "value": "", "bind": {"input": "text"}},
    ],
    "marks": [
        {"type": "area", "from": {"data": "stacked"}, "encoding": {"x": "year", "y": "y0", "y2": "y1", "color": "job"}}
    ],
}


@pytest.fixture
def flights_spec_json() -> str:
    return json.dumps(FLIGHTS_SPEC)


@pytest.fixture
def census_spec_json() -> str:
    return json.dumps(CENSUS_SPEC)


def make_flights_table(n: int = 500, seed: int = 11) -> Table:
    rng = np.random.default_rng(seed)
    delay = rng.normal(60.0, 45.0, n)
    delay[rng.random(n) < 0.05] = np.nan
    distance = np.round(rng.uniform(100, 2800, n), 0)
    return Table.from_columns([("delay", "number"), ("distance", "number")], {"delay": delay, "distance": distance})


def make_census_table() -> Table:
    # 20 rows, 2 genders, 3 jobs: the fixture exercised by the stack oracle
    rows = []
    jobs = ["artist", "doctor", "engineer"]
    people = iter([12, 40, 7, 23, 5, 30, 18, 9, 14, 26, 31, 8, 4, 19, 22, 11, 6, 27, 16, 3])
    for year in (1990.0, 2000.0):
        for job in jobs:
            for sex in ("male", "female"):
                if year == 2000.0 and job == "engineer" and sex == "female":
                    continue  # keep it at 20 rows, unbalanced on purpose
                rows.append((year, sex, job, float(next(people))))
    rows.append((2000.0, "female", "engineer", float(next(people))))
    rows.append((1990.0, "male", "artist", None))
    schema = [("year", "number"), ("sex", "string"), ("job", "string"), ("people", "number")]
    return Table.from_rows(schema, rows[:20])


@pytest.fixture
def flights_table() -> Table:
    return make_flights_table()


@pytest.fixture
def census_table() -> Table:
    return make_census_table()


@pytest.fixture
def flights_driver(flights_table) -> EmbeddedDriver:
    drv = EmbeddedDriver()
    drv.ingest_table("flights", flights_table, digest="fixture-flights")
    yield drv
    drv.close()


@pytest.fixture
def census_driver(census_table) -> EmbeddedDriver:
    drv = EmbeddedDriver()
    drv.ingest_table("census", census_table, digest="fixture-census")
    yield drv
    drv.close()
