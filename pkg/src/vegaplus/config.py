"""Engine configuration: ``vegaplus.toml`` with [cost], [cache], [network],
[server] sections. The VEGAPLUS_CONFIG environment variable overrides the
path; every knob has a stated default so the file is optional."""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .partition import CostConfig
from .stats import NetworkProfile


@dataclass
class CacheConfig:
    budget_mib: float = 256.0
    decay: float = 0.5
    slider_neighbors: int = 2
    top_k: int = 8

    @property
    def budget_bytes(self) -> int:
        return int(self.budget_mib * 1024 * 1024)


@dataclass
class NetworkConfig:
    latency_ms: float = 0.0
    bandwidth_mbps: float = 0.0  # 0 = unlimited

    def profile(self) -> NetworkProfile:
        return NetworkProfile.from_mbps(self.latency_ms, self.bandwidth_mbps)


@dataclass
class ServerConfig:
    port: int = 8080
    session_ttl_s: float = 3600.0
    max_upload_mib: float = 2048.0
    cors_origins: list = field(default_factory=lambda: ["*"])

    @property
    def max_upload_bytes(self) -> int:
        return int(self.max_upload_mib * 1024 * 1024)


@dataclass
class Config:
    cost: CostConfig = field(default_factory=CostConfig)
    cache: CacheConfig = field(default_factory=CacheConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    server: ServerConfig = field(default_factory=ServerConfig)


def load_config(path: str | None = None) -> Config:
    """Load configuration; missing file or keys fall back to defaults."""
    path = path or os.environ.get("VEGAPLUS_CONFIG")
    cfg = Config()
    if path is None or not os.path.exists(path):
        return cfg
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)

    cost = doc.get("cost", {})
    for kind in list(cfg.cost.server_coeff):
        if kind in cost:
            cfg.cost.server_coeff[kind] = float(cost[kind])
    cfg.cost.client_factor = float(cost.get("client_factor", cfg.cost.client_factor))
    cfg.cost.default_selectivity = float(cost.get("default_selectivity", cfg.cost.default_selectivity))

    cache = doc.get("cache", {})
    cfg.cache.budget_mib = float(cache.get("budget_mib", cfg.cache.budget_mib))
    cfg.cache.decay = float(cache.get("decay", cfg.cache.decay))
    cfg.cache.slider_neighbors = int(cache.get("slider_neighbors", cfg.cache.slider_neighbors))
    cfg.cache.top_k = int(cache.get("top_k", cfg.cache.top_k))

    network = doc.get("network", {})
    cfg.network.latency_ms = float(network.get("latency_ms", cfg.network.latency_ms))
    cfg.network.bandwidth_mbps = float(network.get("bandwidth_mbps", cfg.network.bandwidth_mbps))

    server = doc.get("server", {})
    cfg.server.port = int(server.get("port", cfg.server.port))
    cfg.server.session_ttl_s = float(server.get("session_ttl_s", cfg.server.session_ttl_s))
    cfg.server.max_upload_mib = float(server.get("max_upload_mib", cfg.server.max_upload_mib))
    cfg.server.cors_origins = list(server.get("cors_origins", cfg.server.cors_origins))
    return cfg
