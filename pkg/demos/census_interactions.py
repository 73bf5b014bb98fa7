"""The census stacked-area scenario: a radio filter, a regex search box,
and the SQL the middleware generates for each placement.

Run:  python demos/census_interactions.py
"""
import json
import pathlib

from vegaplus import EmbeddedDriver, Session
from vegaplus.runtime import _chain_query, _server_work
from vegaplus.sql.render import render_sql

GALLERY = pathlib.Path(__file__).resolve().parents[1] / "src" / "vegaplus" / "gallery"


def main():
    spec_text = (GALLERY / "census.json").read_text()
    driver = EmbeddedDriver()
    session = Session(spec_text, driver)

    print("signals:", {s.name: s.value for s in session.spec.signals})
    print("recommended cuts:", session.static_plan.cuts)

    print("\nserver queries for the recommended plan:")
    schemas = {d.name: d.schema for d in session.spec.datasets if not d.is_derived}
    extents, frontiers = _server_work(session.static_plan, session.graph)
    for nid in extents + frontiers:
        q, _ = _chain_query(
            session.graph, nid, session.graph.signal_values, driver.dialect, session.tables, schemas
        )
        print(f"  node {nid}: {render_sql(q, driver.dialect)}")

    print("\nfilter by sex, then search jobs with a regex:")
    for name, value in (("gender", "female"), ("job_search", "^(Eng|Tea)"), ("gender", "all")):
        sinks, timing, label = session.handle_interaction(name, value)
        stacked = sinks["stacked"]
        jobs = sorted({r[1] for r in stacked.rows()})
        print(f"  {name}={value!r}: {stacked.nrows} segments over jobs {jobs} ({label} plan, {timing.total_ms:.1f}ms)")

    print("\nstacked segments for the last state (year, job, count, y0, y1):")
    for row in sorted(sinks["stacked"].rows())[:12]:
        print(f"  {int(row[0])} {row[1]:10s} {row[2]:8.0f} [{row[3]:9.1f}, {row[4]:9.1f})")


if __name__ == "__main__":
    main()
