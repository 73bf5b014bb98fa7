import csv
import io
import json
import pathlib

import pytest
from click.testing import CliRunner

from conftest import FLIGHTS_SPEC, make_flights_table
from vegaplus.cli import main

GALLERY = pathlib.Path(__file__).resolve().parents[1] / "src" / "vegaplus" / "gallery"


@pytest.fixture
def workdir(tmp_path):
    spec = dict(FLIGHTS_SPEC)
    spec_path = tmp_path / "flights.json"
    spec_path.write_text(json.dumps(spec))
    data_path = tmp_path / "flights.csv"
    data_path.write_text(make_flights_table(400).to_csv())
    return tmp_path, spec_path, data_path


class TestRun:
    def test_run_prints_sinks(self, workdir):
        _tmp, spec_path, data_path = workdir
        r = CliRunner().invoke(main, ["run", "--spec", str(spec_path), "--data", f"flights={data_path}"])
        assert r.exit_code == 0, r.output
        assert "ingested flights: 400 rows" in r.output
        assert "== binned" in r.output
        assert "bin0,bin1,count" in r.output

    def test_run_explain_prints_merged_sql_and_cost_table(self, workdir):
        _tmp, spec_path, data_path = workdir
        r = CliRunner().invoke(
            main, ["run", "--spec", str(spec_path), "--data", f"flights={data_path}", "--explain"]
        )
        assert r.exit_code == 0, r.output
        assert "== server queries" in r.output
        assert "extent side query" in r.output
        assert "merged chain" in r.output
        assert r.output.count("SELECT") >= 4  # nested 3-level chain + extent query
        assert "== estimated cost (ms)" in r.output
        assert "== measured (ms)" in r.output

    def test_run_with_signal_override(self, workdir):
        _tmp, spec_path, data_path = workdir
        r = CliRunner().invoke(
            main,
            ["run", "--spec", str(spec_path), "--data", f"flights={data_path}", "--signal", "maxbins=20"],
        )
        assert r.exit_code == 0, r.output

    def test_gallery_specs_run_end_to_end(self):
        for name in ("flights.json", "census.json"):
            r = CliRunner().invoke(main, ["run", "--spec", str(GALLERY / name)])
            assert r.exit_code == 0, f"{name}: {r.output}"

    def test_missing_data_binding_is_runtime_error(self, workdir):
        _tmp, spec_path, _data = workdir
        r = CliRunner().invoke(main, ["run", "--spec", str(spec_path)])
        assert r.exit_code == 1
        assert "error:" in r.output

    def test_usage_error_is_exit_2(self, workdir):
        _tmp, spec_path, _data = workdir
        r = CliRunner().invoke(main, ["run", "--spec", str(spec_path), "--data", "nonsense"])
        assert r.exit_code == 2
        r = CliRunner().invoke(main, ["run"])  # --spec required
        assert r.exit_code == 2


class TestBench:
    def test_bench_emits_csv_with_timing_columns(self, tmp_path):
        out = tmp_path / "bench.csv"
        r = CliRunner().invoke(
            main,
            ["bench", "--rows", "500,2000", "--repeat", "2", "--latency-ms", "1", "--bandwidth-mbps", "100", "--out", str(out)],
        )
        assert r.exit_code == 0, r.output
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert {r_["label"] for r_ in rows} == {"baseline", "recommended"}
        assert {int(r_["rows"]) for r_ in rows} == {500, 2000}
        assert len(rows) == 2 * 2 * 2  # rows x labels x repeat
        for row in rows:
            for col in ("server_ms", "network_ms", "client_ms", "total_ms"):
                assert float(row[col]) >= 0

    def test_bench_bad_rows_is_usage_error(self):
        r = CliRunner().invoke(main, ["bench", "--rows", "abc"])
        assert r.exit_code == 2


class TestServe:
    def test_bad_driver_url_is_runtime_error(self):
        r = CliRunner().invoke(main, ["serve", "--db", "postgresql://nope/db"])
        assert r.exit_code == 1
        assert "unsupported" in r.output

    def test_help_lists_subcommands(self):
        r = CliRunner().invoke(main, ["--help"])
        assert r.exit_code == 0
        for cmd in ("serve", "run", "bench"):
            assert cmd in r.output
