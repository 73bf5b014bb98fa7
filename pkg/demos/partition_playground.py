"""How the cost model splits work as data grows and networks degrade, and
what a manual override costs.

Run:  python demos/partition_playground.py
"""
import json

from vegaplus import (
    CostConfig,
    NetworkProfile,
    Stats,
    TableStats,
    apply_override,
    baseline_plan,
    build_dataflow,
    choose_partition,
    parse_spec,
)
from vegaplus.sql.dialect import SQLITE

SPEC = {
    "vegaplus_version": 1,
    "data": [
        {"name": "flights", "table": "flights", "schema": {"delay": "number"}},
        {
            "name": "binned",
            "source": "flights",
            "transform": [
                {"type": "extent", "field": "delay", "signal": "ext"},
                {"type": "bin", "field": "delay", "extent": {"signal": "ext"}, "maxbins": 10},
                {"type": "aggregate", "groupby": ["bin0", "bin1"], "ops": ["count"], "as": ["count"]},
            ],
        },
    ],
    "marks": [{"type": "rect", "from": {"data": "binned"}, "encoding": {"x": "bin0", "y": "count"}}],
}


def fmt(plan):
    e = plan.est
    return f"cuts={plan.cuts['binned']} total={e.total_ms:10.1f}ms (server={e.server_ms:.1f} transfer={e.transfer_ms:.1f} client={e.client_ms:.1f})"


def main():
    g = build_dataflow(parse_spec(json.dumps(SPEC)))
    net = NetworkProfile.from_mbps(latency_ms=50.0, mbps=10.0)

    print("recommended plan vs all-client baseline as the table grows:")
    for rows in (1_000, 100_000, 1_000_000, 10_000_000):
        stats = Stats(tables={"flights": TableStats(row_count=rows, mean_row_width=10.0)})
        rec = choose_partition(g, stats, net, SQLITE)
        base = baseline_plan(g, stats, net)
        print(f"  {rows:>10,} rows  recommended {fmt(rec)}   baseline total={base.est.total_ms:10.1f}ms")

    print("\nnetwork sensitivity at 1M rows (recommended plan):")
    stats = Stats(tables={"flights": TableStats(row_count=1_000_000, mean_row_width=10.0)})
    for latency, mbps in ((0, 1000), (50, 100), (50, 10), (200, 1)):
        rec = choose_partition(g, stats, NetworkProfile.from_mbps(latency, mbps), SQLITE)
        print(f"  L_rt={latency:4d}ms B={mbps:5g}MB/s  {fmt(rec)}")

    print("\nmanual override: drag the bin operator to the client at 10M rows")
    stats = Stats(tables={"flights": TableStats(row_count=10_000_000, mean_row_width=10.0)})
    rec = choose_partition(g, stats, net, SQLITE)
    bin_id = next(n.id for n in g.nodes.values() if n.kind == "bin")
    custom = apply_override(rec, g, bin_id, "Client", stats, net, SQLITE)
    print(f"  recommended {fmt(rec)}")
    print(f"  custom      {fmt(custom)}   <- raw rows now cross the network")


if __name__ == "__main__":
    main()
