"""logqlite: a desk-scale LogQL engine plus an NL-to-LogQL evaluation harness."""

from .logql import (
    QueryError,
    QuerySyntaxError,
    QueryValidationError,
    ast_equal,
    canonicalize,
    parse,
    render,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "QueryError",
    "QuerySyntaxError",
    "QueryValidationError",
    "__version__",
    "ast_equal",
    "canonicalize",
    "parse",
    "render",
    "validate",
]
