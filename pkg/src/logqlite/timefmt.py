"""Nanosecond timestamps and their RFC 3339 text form."""

from __future__ import annotations

import calendar
import re
import time
from datetime import datetime, timezone

NS_PER_SECOND = 1_000_000_000

_RFC3339_RE = re.compile(
    r"(\d{4})-(\d{2})-(\d{2})[Tt ](\d{2}):(\d{2}):(\d{2})"
    r"(?:\.(\d{1,9}))?(Z|z|[+-]\d{2}:\d{2})"
)


def ns_from_rfc3339(text: str) -> int:
    m = _RFC3339_RE.fullmatch(text.strip())
    if m is None:
        raise ValueError(f"not an RFC 3339 instant: {text!r}")
    year, month, day, hour, minute, second = (int(g) for g in m.groups()[:6])
    frac = m.group(7) or ""
    offset = m.group(8)
    seconds = calendar.timegm((year, month, day, hour, minute, second, 0, 0, 0))
    if offset not in ("Z", "z"):
        sign = 1 if offset[0] == "+" else -1
        seconds -= sign * (int(offset[1:3]) * 3600 + int(offset[4:6]) * 60)
    return seconds * NS_PER_SECOND + int(frac.ljust(9, "0") or 0)


def rfc3339_from_ns(ns: int) -> str:
    seconds, frac = divmod(ns, NS_PER_SECOND)
    base = datetime.fromtimestamp(seconds, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")
    if frac:
        return f"{base}.{frac:09d}Z"
    return base + "Z"


def ns_from_datetime(dt: datetime) -> int:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return calendar.timegm(dt.utctimetuple()) * NS_PER_SECOND + dt.microsecond * 1000


def now_ns() -> int:
    return time.time_ns()
