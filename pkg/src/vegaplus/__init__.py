"""vegaplus: compiles declarative visualization specs into reactive
dataflows, translates transforms to SQL, and cost-optimally partitions
execution between an in-process interpreter and a SQL engine."""

from .cache import ResultCache, canonical_key
from .config import Config, load_config
from .dataflow import DataflowGraph, Pulse, build_dataflow, eval_full, eval_partial
from .drivers import EmbeddedDriver, InstrumentedDriver, RemoteDriver, SimulatedNetwork, driver_from_url
from .errors import VegaPlusError
from .partition import (
    CostConfig,
    CostEstimate,
    PartitionPlan,
    apply_override,
    baseline_plan,
    candidate_plans_for_interactions,
    choose_partition,
    estimate_cardinality,
    estimate_cost,
    plan_to_json,
)
from .predict import InteractionPredictor, Prefetcher
from .runtime import TimingBreakdown, execute_plan, reference_sinks
from .session import Session
from .specmodel import VizSpec, parse_spec
from .stats import FieldStats, NetworkProfile, Stats, TableStats
from .table import Table, tables_equal
from .transforms import apply_transform

__version__ = "0.1.0"

__all__ = [
    "ResultCache",
    "canonical_key",
    "Config",
    "load_config",
    "DataflowGraph",
    "Pulse",
    "build_dataflow",
    "eval_full",
    "eval_partial",
    "EmbeddedDriver",
    "InstrumentedDriver",
    "RemoteDriver",
    "SimulatedNetwork",
    "driver_from_url",
    "VegaPlusError",
    "CostConfig",
    "CostEstimate",
    "PartitionPlan",
    "apply_override",
    "baseline_plan",
    "candidate_plans_for_interactions",
    "choose_partition",
    "estimate_cardinality",
    "estimate_cost",
    "plan_to_json",
    "InteractionPredictor",
    "Prefetcher",
    "TimingBreakdown",
    "execute_plan",
    "reference_sinks",
    "Session",
    "VizSpec",
    "parse_spec",
    "FieldStats",
    "NetworkProfile",
    "Stats",
    "TableStats",
    "Table",
    "tables_equal",
    "apply_transform",
    "__version__",
]
