"""Python bindings for the hyperkb engine."""

from ._hyperkb import (
    Error,
    EvalError,
    ExecError,
    KnowledgeBase,
    LoadError,
    NotFoundError,
    ParseError,
    benchmark,
    format_query,
    generate,
    link_patterns,
    parse,
    reference_counts,
)

__all__ = [
    "Error",
    "EvalError",
    "ExecError",
    "KnowledgeBase",
    "LoadError",
    "NotFoundError",
    "ParseError",
    "benchmark",
    "format_query",
    "generate",
    "link_patterns",
    "parse",
    "reference_counts",
]
