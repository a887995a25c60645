"""
Shared helpers for command-line tests.

Commands run in-process through ``mixfed.main.main`` with stdout and stderr
captured, so no subprocess or installed entry point is needed.
"""

import json
from contextlib import redirect_stderr, redirect_stdout
from io import StringIO

from mixfed.main import main


def run_cli_raw(*args) -> tuple[str, str, int]:
    """Run a mixfed command and return raw stdout, stderr, exit code."""
    args_list = [str(a) for a in args]
    if args_list and args_list[0] == "mixfed":
        args_list = args_list[1:]
    stdout, stderr = StringIO(), StringIO()
    with redirect_stdout(stdout), redirect_stderr(stderr):
        code = main(args_list)
    return stdout.getvalue(), stderr.getvalue(), code


def run_cli(*args, expect_success=True) -> dict:
    """Run a mixfed command with JSON output and return the parsed envelope."""
    stdout, stderr, code = run_cli_raw(*args)
    if expect_success:
        assert code == 0, f"exit {code}: {stderr}"
    return json.loads(stdout)


def get_data(result: dict):
    """Unwrap the ``data`` field of a success envelope."""
    return result.get("data", result)


def get_error(stderr: str) -> dict:
    """The single JSON error object written to stderr."""
    lines = [line for line in stderr.splitlines() if line.startswith("{")]
    assert len(lines) == 1, stderr
    return json.loads(lines[0])
