"""Regex dialect: Python `re` minus backreferences and lookaround.

Keeps every accepted pattern inside the linear-time-compatible subset that
log stores accept; named groups use the `(?P<name>...)` form.
"""

from __future__ import annotations

import re

_LOOKAROUND = ("(?=", "(?!", "(?<=", "(?<!")


def pattern_error(pattern: str) -> str | None:
    """Return a reason the pattern is outside the dialect, or None if fine."""
    i = 0
    n = len(pattern)
    while i < n:
        ch = pattern[i]
        if ch == "\\":
            if i + 1 < n and pattern[i + 1] in "123456789":
                return f"backreference \\{pattern[i + 1]} is not supported"
            i += 2
            continue
        if ch == "(":
            for look in _LOOKAROUND:
                if pattern.startswith(look, i):
                    return f"lookaround {look}...) is not supported"
            if pattern.startswith("(?P=", i):
                return "named backreference (?P=...) is not supported"
            if pattern.startswith("(?(", i):
                return "conditional group (?(...) is not supported"
        i += 1
    try:
        re.compile(pattern)
    except re.error as exc:
        return str(exc)
    return None


def compile_pattern(pattern: str) -> re.Pattern[str]:
    """Compile after the dialect check; raises ValueError outside the dialect."""
    err = pattern_error(pattern)
    if err is not None:
        raise ValueError(err)
    return re.compile(pattern)
