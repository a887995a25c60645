"""
Response formatting utilities.

Handles JSON and text formatting for command output, the stderr error
envelope, and the mapping from exceptions to process exit codes.
"""

import functools
import json
import logging
import sys
from typing import Any, Callable, Literal

from pydantic import ValidationError

from .formatters import AIFormatter, MarkdownFormatter, RichFormatter, formatter_registry
from .lib.errors import ConfigError, MixFedError
from .lib.storage import dumps

# Output format type, shared by every command
OutputFormat = Literal["json", "rich", "ai", "markdown"]
FORMATS: tuple[str, ...] = ("json", "rich", "ai", "markdown")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILURE = 2

logger = logging.getLogger("mixfed.response")

# Default formatters for data types without a dedicated one
_DEFAULT_FORMATTERS = {
    "rich": RichFormatter(),
    "ai": AIFormatter(),
    "markdown": MarkdownFormatter(),
}


def success(data: Any) -> str:
    """Standard success envelope."""
    return dumps({"success": True, "data": data})


def error(message: str, code: str = "error", hint: str | None = None) -> str:
    """Standard error envelope, one JSON object on a single line."""
    content = {"success": False, "error": message, "code": code}
    if hint:
        content["hint"] = hint
    return json.dumps(content, sort_keys=True)


def formatted(data: Any, fmt: OutputFormat, data_type: str | None = None) -> str:
    """Render data in the requested format."""
    if fmt == "json":
        return success(data)

    formatter = formatter_registry.get(fmt, plugin="mixfed", data_type=data_type)
    if formatter is None:
        formatter = _DEFAULT_FORMATTERS.get(fmt)

    if formatter is None:
        logger.debug("No %s formatter for data_type=%s, falling back to JSON", fmt, data_type)
        return dumps({
            "success": True,
            "data": data,
            "hint": f"No '{fmt}' formatter for '{data_type}', showing JSON",
        })

    return formatter.format(data)


def exit_code_for(e: Exception) -> int:
    """Exit 1 for bad input, 2 for anything that went wrong while running."""
    if isinstance(e, (ConfigError, ValidationError, FileNotFoundError)):
        return EXIT_CONFIG
    return EXIT_FAILURE


def _describe(e: Exception) -> tuple[str, str, str | None]:
    if isinstance(e, ValidationError):
        first = e.errors()[0] if e.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ()))
        return f"Invalid config: {first.get('msg', str(e))}", "config", f"Check field '{where}'" if where else None
    if isinstance(e, FileNotFoundError):
        message = f"File not found: {e.filename}" if e.filename else str(e)
        return message, "config", "Check --config / --out paths"
    if isinstance(e, MixFedError):
        return str(e), e.code, e.hint
    return str(e) or type(e).__name__, "internal", None


def command_error_handler(func: Callable[..., int]) -> Callable[..., int]:
    """Decorator for command handlers.

    Catches exceptions, writes one JSON error object to stderr and returns
    the matching exit code instead of raising.
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except (MixFedError, ValidationError, FileNotFoundError) as e:
            message, code, hint = _describe(e)
            logger.info("Command failed: %s", message)
            print(error(message, code, hint), file=sys.stderr)
            return exit_code_for(e)
        except Exception as e:
            logger.exception("Unexpected failure")
            message, code, hint = _describe(e)
            print(error(message, code, hint), file=sys.stderr)
            return EXIT_FAILURE

    return wrapper
