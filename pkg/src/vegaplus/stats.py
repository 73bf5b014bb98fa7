"""Table statistics used by the cost model."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class FieldStats:
    distinct: float
    min: float | None = None
    max: float | None = None
    mean_width: float = 8.0  # bytes when serialized


@dataclass
class TableStats:
    row_count: int
    mean_row_width: float  # bytes per row when serialized
    fields: dict[str, FieldStats] = field(default_factory=dict)

    def __post_init__(self):
        if self.row_count < 0:
            raise ValueError("row count must be >= 0")
        if self.mean_row_width <= 0:
            raise ValueError("row width must be > 0")


@dataclass
class Stats:
    tables: dict[str, TableStats] = field(default_factory=dict)
    default_selectivity: float = 0.5

    def __post_init__(self):
        if not (0 < self.default_selectivity <= 1):
            raise ValueError("selectivity must be in (0, 1]")

    def table(self, name: str) -> TableStats:
        return self.tables[name]


@dataclass(frozen=True)
class NetworkProfile:
    latency_ms: float = 0.0
    bandwidth_bytes_per_ms: float = float("inf")  # bytes per millisecond

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError("latency must be >= 0")
        if self.bandwidth_bytes_per_ms <= 0:
            raise ValueError("bandwidth must be > 0")

    @classmethod
    def from_mbps(cls, latency_ms: float, mbps: float | None) -> "NetworkProfile":
        """mbps uses MB = 10^6 bytes; None or 0 means unlimited."""
        if not mbps:
            return cls(latency_ms, float("inf"))
        return cls(latency_ms, mbps * 1e6 / 1000.0)

    @property
    def is_zero(self) -> bool:
        return self.latency_ms == 0 and self.bandwidth_bytes_per_ms == float("inf")

    def transfer_ms(self, nbytes: float) -> float:
        if self.bandwidth_bytes_per_ms == float("inf"):
            return self.latency_ms
        return self.latency_ms + nbytes / self.bandwidth_bytes_per_ms
