"""Command-line front door: serve, run, bench."""
from __future__ import annotations

import json
import sys

import click

from .config import load_config
from .errors import VegaPlusError


@click.group()
def main():
    """Middleware that partitions declarative visualization dataflows
    between an embedded SQL engine and an in-process interpreter."""


def _parse_data_args(pairs) -> dict:
    out = {}
    for p in pairs:
        if "=" not in p:
            raise click.UsageError(f"--data expects NAME=FILE, got {p!r}")
        name, path = p.split("=", 1)
        out[name] = path
    return out


@main.command()
@click.option("--db", default="embedded://:memory:", show_default=True, help="driver URL")
@click.option("--port", default=None, type=int, help="listen port (default from config)")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--latency-ms", default=None, type=float, help="simulated round-trip latency")
@click.option("--bandwidth-mbps", default=None, type=float, help="simulated bandwidth (MB/s); 0 = unlimited")
@click.option("--config", "config_path", default=None, type=click.Path(), help="vegaplus.toml path")
def serve(db, port, host, latency_ms, bandwidth_mbps, config_path):
    """Start the HTTP service (and the dashboard, if built)."""
    import uvicorn

    from .drivers import driver_from_url
    from .service import create_app

    config = load_config(config_path)
    if latency_ms is not None:
        config.network.latency_ms = latency_ms
    if bandwidth_mbps is not None:
        config.network.bandwidth_mbps = bandwidth_mbps
    try:
        driver = driver_from_url(db)
    except VegaPlusError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    app = create_app(driver, config)
    _mount_dashboard(app)
    uvicorn.run(app, host=host, port=port or config.server.port)


def _mount_dashboard(app):
    from pathlib import Path

    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(dist), html=True), name="dashboard")


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True), help="spec JSON file")
@click.option("--data", "data_args", multiple=True, help="NAME=FILE CSV bindings")
@click.option("--db", default="embedded://:memory:", show_default=True)
@click.option("--signal", "signal_args", multiple=True, help="NAME=VALUE overrides")
@click.option("--explain", is_flag=True, help="print merged SQL and the cost table")
@click.option("--config", "config_path", default=None, type=click.Path())
def run(spec_path, data_args, db, signal_args, explain, config_path):
    """Execute a spec once and print the sink datasets (and plan)."""
    from .drivers import driver_from_url
    from .session import Session

    config = load_config(config_path)
    try:
        driver = driver_from_url(db)
        for name, path in _parse_data_args(data_args).items():
            with open(path) as fh:
                rows = driver.ingest(name, fh.read())
            click.echo(f"ingested {name}: {rows} rows")
        with open(spec_path) as fh:
            spec_text = fh.read()
        session = Session(spec_text, driver, config=config, net=config.network.profile())
        for arg in signal_args:
            name, raw = arg.split("=", 1)
            try:
                value = float(raw)
            except ValueError:
                value = raw
            session.handle_interaction(name, value)
        for name, table in session.sink_tables().items():
            click.echo(f"== {name} ({table.nrows} rows)")
            click.echo(table.to_csv().rstrip())
        if explain:
            _print_explain(session)
    except VegaPlusError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


def _print_explain(session):
    from .runtime import _chain_query, _server_work
    from .sql.render import render_sql

    g = session.graph
    plan = session.active_plan
    schemas = {ds.name: ds.schema for ds in session.spec.datasets if not ds.is_derived}
    extents, frontiers = _server_work(plan, g)
    click.echo("== plan")
    for ds, cut in sorted(plan.cuts.items()):
        click.echo(f"  {ds}: {cut} of {len(g.pipelines[ds])} transforms on the server")
    click.echo("== server queries")
    for nid in extents + frontiers:
        q, _ = _chain_query(g, nid, g.signal_values, session.driver.dialect, session.tables, schemas)
        node = g.nodes[nid]
        role = "extent side query" if node.kind == "extent" else "merged chain"
        click.echo(f"-- node {nid} ({node.kind}, {role})")
        click.echo(render_sql(q, session.driver.dialect))
    est = plan.est
    click.echo("== estimated cost (ms)")
    click.echo(f"  server   {est.server_ms:12.3f}")
    click.echo(f"  transfer {est.transfer_ms:12.3f}")
    click.echo(f"  client   {est.client_ms:12.3f}")
    click.echo(f"  total    {est.total_ms:12.3f}")
    click.echo("== measured (ms)")
    for t in session.timings:
        click.echo(
            f"  [{t.seq}] {t.label:12s} server={t.server_ms:.2f} network={t.network_ms:.2f} "
            f"client={t.client_ms:.2f} total={t.total_ms:.2f}"
        )


@main.command()
@click.option("--rows", default="100000,1000000", show_default=True, help="comma-separated row counts")
@click.option("--repeat", default=1, show_default=True, type=int)
@click.option("--latency-ms", default=50.0, show_default=True, type=float)
@click.option("--bandwidth-mbps", default=10.0, show_default=True, type=float)
@click.option("--spec", "spec_path", default=None, type=click.Path(exists=True), help="spec JSON (default: synthetic flights)")
@click.option("--data", "data_args", multiple=True, help="NAME=FILE CSV bindings for --spec")
@click.option("--out", "out_path", default=None, type=click.Path(), help="write CSV here (default: stdout)")
@click.option("--config", "config_path", default=None, type=click.Path())
def bench(rows, repeat, latency_ms, bandwidth_mbps, spec_path, data_args, out_path, config_path):
    """Sweep synthetic row counts; emit per-plan TimingBreakdowns as CSV."""
    from .bench import records_to_csv, run_bench

    try:
        rows_list = [int(r) for r in rows.split(",") if r]
    except ValueError:
        raise click.UsageError(f"--rows expects comma-separated integers, got {rows!r}")
    spec_json = None
    if spec_path:
        with open(spec_path) as fh:
            spec_json = fh.read()
    try:
        records = run_bench(
            rows_list,
            repeat=repeat,
            latency_ms=latency_ms,
            bandwidth_mbps=bandwidth_mbps,
            spec_json=spec_json,
            data_files=_parse_data_args(data_args) or None,
            config=load_config(config_path),
        )
    except VegaPlusError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    csv_text = records_to_csv(records)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(csv_text)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(csv_text.rstrip())


if __name__ == "__main__":
    main()
