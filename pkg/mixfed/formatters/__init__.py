"""
mixfed formatters package.

Provides Rich, AI, and Markdown formatters for every CLI data type.
Importing this package triggers decorator-based auto-registration.
"""

# Import all formatter modules to trigger @register_formatter decorators
from . import (  # noqa: F401
    instance,
    phase1,
    report,
    summary,
)

# Re-export base classes and utilities used by external code
from .base import (
    AIFormatter,
    Formatter,
    FormatterRegistry,
    JsonFormatter,
    MarkdownFormatter,
    Panel,
    RichFormatter,
    Table,
    Text,
    box,
    fmt_bytes,
    fmt_float,
    formatter_registry,
    register_formatter,
    render_to_string,
)
