"""LRU result cache keyed by canonical SQL.

The key combines the content hashes of every base table a query reads with
the rewritten, rendered SQL text (whitespace-normalized; literals are already
canonical from the renderer). Re-ingesting a table changes its hash, which
invalidates old entries without a staleness protocol. All operations are
linearizable via one lock; the byte budget holds after every insertion.
"""
from __future__ import annotations

import re
import threading
from collections import OrderedDict
from dataclasses import dataclass

from .table import Table

_WS = re.compile(r"\s+")


def canonical_key(table_hashes: dict[str, str], sql: str) -> str:
    """Key for one query result: sorted content hashes + normalized SQL."""
    prefix = ",".join(f"{name}:{digest}" for name, digest in sorted(table_hashes.items()))
    normalized = _WS.sub(" ", sql).strip()
    return f"{prefix}|{normalized}"


@dataclass
class CacheMetrics:
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    bytes: int = 0
    entries: int = 0

    def to_json(self) -> dict:
        return {
            "hits": self.hits,
            "misses": self.misses,
            "evictions": self.evictions,
            "bytes": self.bytes,
            "entries": self.entries,
        }


class ResultCache:
    """Byte-budgeted LRU over (key -> Table)."""

    def __init__(self, budget_bytes: int = 256 * 1024 * 1024):
        if budget_bytes < 0:
            raise ValueError("budget must be >= 0")
        self.budget = budget_bytes
        self._entries: OrderedDict[str, tuple[Table, int]] = OrderedDict()
        self._bytes = 0
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.evictions = 0

    def get(self, key: str) -> Table | None:
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                self.misses += 1
                return None
            self._entries.move_to_end(key)
            self.hits += 1
            return entry[0]

    def contains(self, key: str) -> bool:
        """Presence check without touching recency or hit/miss counters."""
        with self._lock:
            return key in self._entries

    def peek(self, key: str) -> Table | None:
        """Read without touching recency or hit/miss counters."""
        with self._lock:
            entry = self._entries.get(key)
            return entry[0] if entry else None

    def put(self, key: str, table: Table) -> list[str]:
        """Insert (idempotently per key) and return the evicted keys.

        An entry larger than the whole budget is rejected outright."""
        size = table.estimated_bytes()
        evicted: list[str] = []
        with self._lock:
            if key in self._entries:
                _old, old_size = self._entries.pop(key)
                self._bytes -= old_size
            if size > self.budget:
                return evicted
            self._entries[key] = (table, size)
            self._bytes += size
            while self._bytes > self.budget:
                old_key, (_t, old_size) = self._entries.popitem(last=False)
                self._bytes -= old_size
                self.evictions += 1
                evicted.append(old_key)
            return evicted

    def flush(self):
        with self._lock:
            self._entries.clear()
            self._bytes = 0

    @property
    def bytes_used(self) -> int:
        with self._lock:
            return self._bytes

    def metrics(self) -> CacheMetrics:
        with self._lock:
            return CacheMetrics(
                hits=self.hits,
                misses=self.misses,
                evictions=self.evictions,
                bytes=self._bytes,
                entries=len(self._entries),
            )
