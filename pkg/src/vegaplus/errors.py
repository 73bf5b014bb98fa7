"""Exception hierarchy shared across the engine.

Every error that can reach the HTTP layer carries a stable machine code so
the API can map it to exactly one (status, code) pair.
"""
from __future__ import annotations


class VegaPlusError(Exception):
    """Base class for all engine errors."""

    code = "internal_error"


class SpecError(VegaPlusError):
    """Invalid visualization specification. Carries the JSON path of the
    offending element (``$.data[1].transform[0]`` style)."""

    code = "spec_invalid"

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class CycleError(SpecError):
    """The combined data/parameter graph contains a cycle."""

    code = "spec_cycle"

    def __init__(self, node_ids: list[int], path: str = "$"):
        self.node_ids = node_ids
        super().__init__(f"dataflow contains a cycle through nodes {node_ids}", path)


class ExprSyntaxError(VegaPlusError):
    """Lexer or parser failure; ``offset`` is the byte offset in the source."""

    code = "expr_syntax"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprTypeError(VegaPlusError):
    """Expression does not type-check against the declared schema."""

    code = "expr_type"


class EvalError(VegaPlusError):
    """Runtime failure while evaluating an operator."""

    code = "eval_error"

    def __init__(self, message: str, node_id: int | None = None, row: int | None = None):
        detail = message
        if node_id is not None:
            detail = f"node {node_id}: {detail}"
        if row is not None:
            detail = f"{detail} (row {row})"
        super().__init__(detail)
        self.node_id = node_id
        self.row = row


class UnsupportedOnDialect(VegaPlusError):
    """The active SQL dialect cannot express this operator."""

    code = "unsupported_on_dialect"


class OverrideRejected(VegaPlusError):
    """A manual placement override cannot produce a valid plan."""

    code = "override_rejected"


class DriverError(VegaPlusError):
    """Database driver failure; carries the SQL that failed, if any."""

    code = "driver_error"

    def __init__(self, message: str, sql: str | None = None):
        if sql is not None:
            message = f"{message}\nSQL: {sql}"
        super().__init__(message)
        self.sql = sql


class UnknownDatasetError(VegaPlusError):
    code = "unknown_dataset"


class UnknownSessionError(VegaPlusError):
    code = "unknown_session"


class UnknownSignalError(VegaPlusError):
    code = "unknown_signal"


class SignalDomainError(VegaPlusError):
    """Signal value falls outside its bind's domain."""

    code = "signal_domain"
