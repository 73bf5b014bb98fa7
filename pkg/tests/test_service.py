import concurrent.futures
import json

import jsonschema
import numpy as np
import pytest
from starlette.testclient import TestClient

from conftest import make_census_table, make_flights_table
from vegaplus.config import Config
from vegaplus.dataflow import build_dataflow
from vegaplus.drivers import EmbeddedDriver
from vegaplus.runtime import reference_sinks
from vegaplus.schemas import ERROR_SCHEMA, PLAN_SCHEMA, TIMING_SCHEMA
from vegaplus.service import create_app
from vegaplus.specmodel import parse_spec
from vegaplus.table import Table, tables_equal


@pytest.fixture
def driver():
    drv = EmbeddedDriver()
    yield drv
    drv.close()


@pytest.fixture
def client(driver):
    app = create_app(driver, Config())
    with TestClient(app) as c:
        yield c


def _upload(client, name, csv_text):
    return client.post("/api/datasets", data={"name": name}, files={"file": (f"{name}.csv", csv_text, "text/csv")})


def _flights_session(client, flights_spec_json, rows=800, compare=None):
    t = make_flights_table(rows)
    r = _upload(client, "flights", t.to_csv())
    assert r.status_code == 200, r.text
    url = "/api/specs" + (f"?compare={compare}" if compare else "")
    r = client.post(url, json={"spec": json.loads(flights_spec_json)})
    assert r.status_code == 200, r.text
    return r.json(), t


class TestHealthAndMetrics:
    def test_health(self, client):
        r = client.get("/api/health")
        assert r.status_code == 200 and r.json() == {"status": "ok"}

    def test_schemas_published(self, client):
        r = client.get("/api/schemas")
        assert set(r.json()) == {"plan", "timing", "error"}

    def test_metrics_shape(self, client):
        r = client.get("/api/metrics")
        body = r.json()
        assert {"hits", "misses", "evictions", "bytes", "entries", "sessions"} <= set(body)


class TestDatasets:
    def test_upload_three_rows(self, client):
        r = _upload(client, "tiny", "a,b\r\n1,x\r\n2,y\r\n3,z\r\n")
        assert r.status_code == 200
        assert r.json() == {
            "name": "tiny",
            "rows": 3,
            "schema": [{"field": "a", "type": "number"}, {"field": "b", "type": "string"}],
        }

    def test_type_inference_on_larger_upload(self, client):
        t = make_flights_table(2000)
        r = _upload(client, "flights", t.to_csv())
        schema = {c["field"]: c["type"] for c in r.json()["schema"]}
        assert schema == {"delay": "number", "distance": "number"}

    def test_duplicate_upload_idempotent(self, client):
        csv_text = "a\r\n1\r\n2\r\n"
        first = _upload(client, "dup", csv_text).json()
        second = _upload(client, "dup", csv_text).json()
        assert first == second

    def test_malformed_csv_is_400(self, client):
        r = _upload(client, "bad", "a,b\r\n1\r\n")
        assert r.status_code == 400
        body = r.json()
        jsonschema.validate(body, ERROR_SCHEMA)
        assert body["code"] == "malformed_csv"

    def test_oversized_upload_is_413(self, driver):
        cfg = Config()
        cfg.server.max_upload_mib = 0.00001  # ~10 bytes
        app = create_app(driver, cfg)
        with TestClient(app) as c:
            r = _upload(c, "big", "a\r\n" + "1\r\n" * 100)
            assert r.status_code == 413
            assert r.json()["code"] == "too_large"


class TestSpecs:
    def test_flights_session_places_processing_on_server(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json, rows=3000)
        assert body["session_id"]
        jsonschema.validate(body["plan"], PLAN_SCHEMA)
        sides = {n["kind"]: n["side"] for n in body["plan"]["nodes"] if n["kind"] != "signal"}
        assert sides == {"scan": "Server", "extent": "Server", "bin": "Server", "aggregate": "Server"}
        assert body["sinks"]["binned"]
        for t in body["timings"]:
            jsonschema.validate(t, TIMING_SCHEMA)

    def test_zero_transform_spec_single_cut_after_scan(self, client):
        _upload(client, "plain", "a\r\n1\r\n2\r\n")
        doc = {
            "vegaplus_version": 1,
            "data": [{"name": "plain", "table": "plain"}],
            "marks": [{"type": "point", "from": {"data": "plain"}, "encoding": {"x": "a"}}],
        }
        r = client.post("/api/specs", json={"spec": doc})
        assert r.status_code == 200, r.text
        plan = r.json()["plan"]
        assert [e for e in plan["cut_edges"]] == [{"from": plan["nodes"][0]["id"], "to": None}]

    def test_census_session_has_candidates_for_both_signals(self, client, census_spec_json):
        _upload(client, "census", make_census_table().to_csv())
        r = client.post("/api/specs", json={"spec": json.loads(census_spec_json)})
        assert r.status_code == 200, r.text
        cands = r.json()["candidates"]
        assert set(cands) == {"gender", "job_search"}
        for plan in cands.values():
            jsonschema.validate(plan, PLAN_SCHEMA)

    def test_invalid_spec_is_422_with_path(self, client):
        doc = {"vegaplus_version": 1, "data": [{"name": "d", "values": [{"a": 1}], "transform": [{"type": "pivot"}]}]}
        r = client.post("/api/specs", json={"spec": doc})
        assert r.status_code == 422
        body = r.json()
        jsonschema.validate(body, ERROR_SCHEMA)
        assert body["path"] == "$.data[0].transform[0]"

    def test_unknown_dataset_is_409(self, client, flights_spec_json):
        r = client.post("/api/specs", json={"spec": json.loads(flights_spec_json)})
        assert r.status_code == 409
        assert r.json()["code"] == "unknown_dataset"

    def test_compare_baseline_times_both_plans(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json, compare="baseline")
        labels = [t["label"] for t in body["timings"]]
        assert labels == ["baseline", "recommended"]

    def test_dataset_bindings_map_spec_names_to_tables(self, client, flights_spec_json):
        t = make_flights_table(300)
        _upload(client, "flights_v2", t.to_csv())
        doc = json.loads(flights_spec_json)
        r = client.post("/api/specs", json={"spec": doc, "bindings": {"flights": "flights_v2"}})
        assert r.status_code == 200, r.text
        assert r.json()["sinks"]["binned"]


class TestSignals:
    def test_maxbins_update_returns_new_histogram(self, client, flights_spec_json):
        body, t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        r = client.post(f"/api/sessions/{sid}/signals", json={"name": "maxbins", "value": 20})
        assert r.status_code == 200, r.text
        out = r.json()
        assert out["changed"] == ["binned"]
        jsonschema.validate(out["timing"], TIMING_SCHEMA)
        session = client.app.state.engine.sessions[sid]
        ref = reference_sinks(build_dataflow(session.spec), {"flights": t}, {"maxbins": 20.0})
        got = Table.from_rows(
            [("bin0", "number"), ("bin1", "number"), ("count", "number")],
            [(r_["bin0"], r_["bin1"], r_["count"]) for r_ in out["sinks"]["binned"]],
        )
        assert tables_equal(got, ref["binned"])

    def test_repeat_event_is_cache_hit(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        client.post(f"/api/sessions/{sid}/signals", json={"name": "maxbins", "value": 25})
        r = client.post(f"/api/sessions/{sid}/signals", json={"name": "maxbins", "value": 25})
        assert r.json()["timing"]["server_ms"] == 0.0

    def test_unknown_signal_is_422(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        r = client.post(f"/api/sessions/{sid}/signals", json={"name": "nope", "value": 1})
        assert r.status_code == 422
        assert r.json()["code"] == "unknown_signal"

    def test_out_of_domain_is_422(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        r = client.post(f"/api/sessions/{sid}/signals", json={"name": "maxbins", "value": 400})
        assert r.status_code == 422
        assert r.json()["code"] == "signal_domain"

    def test_unknown_session_is_404(self, client):
        r = client.post("/api/sessions/zzz/signals", json={"name": "x", "value": 1})
        assert r.status_code == 404


class TestPartitionOverride:
    def test_toggle_bin_to_client_increases_transfer(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json, rows=3000)
        sid = body["session_id"]
        bin_id = next(n["id"] for n in body["plan"]["nodes"] if n["kind"] == "bin")
        r = client.post(f"/api/sessions/{sid}/partition", json={"node_id": bin_id, "side": "Client"})
        assert r.status_code == 200, r.text
        out = r.json()
        assert out["timing"]["label"] == "custom"
        sides = {n["kind"]: n["side"] for n in out["plan"]["nodes"] if n["kind"] != "signal"}
        assert sides["bin"] == "Client" and sides["aggregate"] == "Client"
        assert out["plan"]["estimate"]["transfer_ms"] >= body["plan"]["estimate"]["transfer_ms"]

    def test_toggle_round_trip_restores_recommended(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json, rows=3000)
        sid = body["session_id"]
        bin_id = next(n["id"] for n in body["plan"]["nodes"] if n["kind"] == "bin")
        sides_before = {n["id"]: n["side"] for n in body["plan"]["nodes"]}
        client.post(f"/api/sessions/{sid}/partition", json={"node_id": bin_id, "side": "Client"})
        restored = client.post(f"/api/sessions/{sid}/partition", json={"node_id": bin_id, "side": "Server"}).json()
        assert {n["id"]: n["side"] for n in restored["plan"]["nodes"]} == sides_before
        assert restored["plan"]["label"] == "recommended"

    def test_noop_toggle_appends_timing_row(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        bin_id = next(n["id"] for n in body["plan"]["nodes"] if n["kind"] == "bin")
        before = len(client.get(f"/api/sessions/{sid}/timings").json()["timings"])
        r = client.post(f"/api/sessions/{sid}/partition", json={"node_id": bin_id, "side": "Server"})
        assert r.status_code == 200
        timings = client.get(f"/api/sessions/{sid}/timings").json()["timings"]
        assert len(timings) == before + 1

    def test_scan_to_client_is_409(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        scan_id = next(n["id"] for n in body["plan"]["nodes"] if n["kind"] == "scan")
        r = client.post(f"/api/sessions/{sid}/partition", json={"node_id": scan_id, "side": "Client"})
        assert r.status_code == 409
        assert r.json()["code"] == "override_rejected"

    def test_random_toggles_keep_plan_schema_valid(self, client, flights_spec_json):
        import random

        rng = random.Random(4)
        body, _t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        ids = [n["id"] for n in body["plan"]["nodes"] if n["kind"] not in ("signal", "scan")]
        for _ in range(10):
            r = client.post(
                f"/api/sessions/{sid}/partition",
                json={"node_id": rng.choice(ids), "side": rng.choice(["Server", "Client"])},
            )
            assert r.status_code in (200, 409)
            if r.status_code == 200:
                jsonschema.validate(r.json()["plan"], PLAN_SCHEMA)


class TestInspection:
    def test_plan_carries_sql_for_server_nodes_only(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json, rows=3000)
        sid = body["session_id"]
        plan = client.get(f"/api/sessions/{sid}/plan").json()["plan"]
        for node in plan["nodes"]:
            if node["kind"] == "signal":
                assert "sql" not in node
            elif node["side"] == "Server":
                assert "sql" in node and node["sql"].startswith("SELECT")
            else:
                assert "sql" not in node

    def test_timings_append_only_with_labels(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json, compare="baseline")
        sid = body["session_id"]
        bin_id = next(n["id"] for n in body["plan"]["nodes"] if n["kind"] == "bin")
        client.post(f"/api/sessions/{sid}/partition", json={"node_id": bin_id, "side": "Client"})
        rows = client.get(f"/api/sessions/{sid}/timings").json()["timings"]
        assert [r["label"] for r in rows] == ["baseline", "recommended", "custom"]
        assert [r["seq"] for r in rows] == sorted(r["seq"] for r in rows)

    def test_dataset_rows_served_as_ndjson(self, client, flights_spec_json):
        body, t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        r = client.get(f"/api/sessions/{sid}/datasets/binned")
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("application/x-ndjson")
        rows = [json.loads(line) for line in r.text.strip().split("\n")]
        ref = reference_sinks(build_dataflow(client.app.state.engine.sessions[sid].spec), {"flights": t}, {"maxbins": 10.0})
        got = Table.from_rows(
            [("bin0", "number"), ("bin1", "number"), ("count", "number")],
            [(x["bin0"], x["bin1"], x["count"]) for x in rows],
        )
        assert tables_equal(got, ref["binned"])

    def test_unknown_dataset_404_vs_409(self, client, flights_spec_json):
        body, _t = _flights_session(client, flights_spec_json)
        sid = body["session_id"]
        r = client.get(f"/api/sessions/{sid}/datasets/nope")
        assert r.status_code == 409
        r = client.get("/api/sessions/zzz/plan")
        assert r.status_code == 404


class TestConcurrency:
    def test_sixteen_concurrent_sessions_stay_isolated(self, client, flights_spec_json):
        t = make_flights_table(1500)
        _upload(client, "flights", t.to_csv())
        spec = json.loads(flights_spec_json)

        sweep = [5, 10, 15, 20, 25, 30, 35, 40]

        def run_one(i):
            r = client.post("/api/specs", json={"spec": spec})
            assert r.status_code == 200, r.text
            sid = r.json()["session_id"]
            my_values = [sweep[(i + k) % len(sweep)] for k in range(4)]
            for v in my_values:
                rr = client.post(f"/api/sessions/{sid}/signals", json={"name": "maxbins", "value": v})
                assert rr.status_code == 200, rr.text
            timings = client.get(f"/api/sessions/{sid}/timings").json()["timings"]
            assert len(timings) == 1 + len(my_values)
            final = client.get(f"/api/sessions/{sid}/datasets/binned")
            rows = [json.loads(line) for line in final.text.strip().split("\n")]
            got = Table.from_rows(
                [("bin0", "number"), ("bin1", "number"), ("count", "number")],
                [(x["bin0"], x["bin1"], x["count"]) for x in rows],
            )
            ref = reference_sinks(
                build_dataflow(parse_spec(json.dumps(spec), table_schemas={"flights": t.schema})),
                {"flights": t},
                {"maxbins": float(my_values[-1])},
            )
            assert tables_equal(got, ref["binned"]), f"session {i}"
            return sid

        with concurrent.futures.ThreadPoolExecutor(max_workers=16) as pool:
            sids = list(pool.map(run_one, range(16)))
        assert len(set(sids)) == 16
