"""Published JSON schemas for API payloads (plan, timing, error).

Responses are validated against these in the integration tests; the
dashboard relies on the same shapes.
"""
from __future__ import annotations

SIDE = {"type": "string", "enum": ["Server", "Client"]}

PLAN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["label", "nodes", "edges", "cut_edges", "estimate"],
    "properties": {
        "label": {"type": "string", "enum": ["baseline", "recommended", "custom"]},
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "side"],
                "properties": {
                    "id": {"type": "integer"},
                    "kind": {"type": "string"},
                    "side": SIDE,
                    "dataset": {"type": "string"},
                    "name": {"type": "string"},
                    "sql": {"type": "string"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to", "kind"],
                "properties": {
                    "from": {"type": "integer"},
                    "to": {"type": "integer"},
                    "kind": {"type": "string", "enum": ["data", "param", "publish"]},
                },
            },
        },
        "cut_edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from"],
                "properties": {"from": {"type": "integer"}, "to": {"type": ["integer", "null"]}},
            },
        },
        "estimate": {
            "type": "object",
            "required": ["server_ms", "transfer_ms", "client_ms", "total_ms"],
            "properties": {
                "server_ms": {"type": "number", "minimum": 0},
                "transfer_ms": {"type": "number", "minimum": 0},
                "client_ms": {"type": "number", "minimum": 0},
                "total_ms": {"type": "number", "minimum": 0},
            },
        },
    },
}

TIMING_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["seq", "label", "server_ms", "network_ms", "client_ms", "total_ms"],
    "properties": {
        "seq": {"type": "integer", "minimum": 1},
        "label": {"type": "string", "enum": ["baseline", "recommended", "custom"]},
        "server_ms": {"type": "number", "minimum": 0},
        "network_ms": {"type": "number", "minimum": 0},
        "client_ms": {"type": "number", "minimum": 0},
        "total_ms": {"type": "number", "minimum": 0},
    },
}

ERROR_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["status", "code", "message"],
    "properties": {
        "status": {"type": "integer"},
        "code": {"type": "string"},
        "message": {"type": "string"},
        "path": {"type": "string"},
        "node_id": {"type": "integer"},
    },
}

ALL_SCHEMAS = {"plan": PLAN_SCHEMA, "timing": TIMING_SCHEMA, "error": ERROR_SCHEMA}
