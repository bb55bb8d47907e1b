"""Label-indexed, time-ordered log store — the database queries run against.

A stream is the list of entries sharing one exact label set, ascending by
timestamp.  The store indexes label name -> value -> stream ids; the log
text itself is never indexed.  Stores are immutable once built and safe to
share across threads.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from pathlib import Path

from .timefmt import ns_from_rfc3339, rfc3339_from_ns

STORE_VERSION = 1


def labels_key(labels: dict[str, str]) -> str:
    """Canonical text form of a label set, usable as a sort/group key."""
    inner = ", ".join(f'{k}="{v}"' for k, v in sorted(labels.items()))
    return "{" + inner + "}"


@dataclass
class LogEntry:
    """One log line: nanosecond timestamp, label set, message text."""

    ts: int
    labels: dict[str, str]
    line: str


@dataclass
class StoredEntry:
    ts: int
    line: str
    seq: int  # store-wide tie-break, assigned in canonical stream order


@dataclass
class Stream:
    labels: dict[str, str]
    entries: list[StoredEntry] = field(default_factory=list)

    @property
    def key(self) -> str:
        return labels_key(self.labels)

    def entries_between(self, lo: int, hi: int) -> list[StoredEntry]:
        """Entries with lo <= ts <= hi (both ends inclusive)."""
        ts_list = [e.ts for e in self.entries]
        start = bisect.bisect_left(ts_list, lo)
        stop = bisect.bisect_right(ts_list, hi)
        return self.entries[start:stop]


class LogStore:
    """Immutable collection of streams plus the label inverted index."""

    def __init__(self, streams: list[Stream], application: str, anchor_ns: int):
        self.streams = streams
        self.application = application
        self.anchor_ns = anchor_ns
        self.index: dict[str, dict[str, list[int]]] = {}
        for sid, stream in enumerate(streams):
            for name, value in stream.labels.items():
                self.index.setdefault(name, {}).setdefault(value, []).append(sid)
        all_ts = [e.ts for s in streams for e in s.entries]
        self.min_ts = min(all_ts) if all_ts else 0
        self.max_ts = max(all_ts) if all_ts else 0

    @classmethod
    def build(cls, entries: list[LogEntry], application: str, anchor_ns: int) -> "LogStore":
        """Group entries into streams by exact label set.

        Within a stream the given order is kept for equal timestamps (ingest
        order); streams sort by their canonical label key, and every entry
        gets a store-wide sequence number in that order.
        """
        groups: dict[str, Stream] = {}
        for entry in entries:
            if not entry.labels:
                raise ValueError("log entry without labels")
            key = labels_key(entry.labels)
            stream = groups.get(key)
            if stream is None:
                stream = groups[key] = Stream(dict(entry.labels))
            stream.entries.append(StoredEntry(entry.ts, entry.line, -1))
        streams = [groups[key] for key in sorted(groups)]
        seq = 0
        for stream in streams:
            stream.entries.sort(key=lambda e: e.ts)  # stable: ties keep ingest order
            for e in stream.entries:
                e.seq = seq
                seq += 1
        return cls(streams, application, anchor_ns)

    @property
    def n_entries(self) -> int:
        return sum(len(s.entries) for s in self.streams)

    def iter_entries(self):
        """Every (stream, entry) pair, canonical stream order."""
        for stream in self.streams:
            for entry in stream.entries:
                yield stream, entry

    # -- serialization -------------------------------------------------------
    #
    # Line-delimited JSON, documented in docs/formats.md:
    #   header  {"version": 1, "application": ..., "anchor": "<rfc3339>"}
    #   stream  {"labels": {...}}
    #   entry   {"e": [ts_ns, "line"]}
    # Streams appear in canonical label-key order, entries ascending, so a
    # load/dump cycle is byte-identical.

    def dump_bytes(self) -> bytes:
        lines = [
            json.dumps(
                {
                    "version": STORE_VERSION,
                    "application": self.application,
                    "anchor": rfc3339_from_ns(self.anchor_ns),
                },
                sort_keys=True,
                separators=(",", ":"),
            )
        ]
        for stream in self.streams:
            lines.append(
                json.dumps({"labels": stream.labels}, sort_keys=True, separators=(",", ":"))
            )
            for e in stream.entries:
                lines.append(json.dumps({"e": [e.ts, e.line]}, separators=(",", ":")))
        return ("\n".join(lines) + "\n").encode("utf-8")

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.dump_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "LogStore":
        raw = Path(path).read_bytes().decode("utf-8")
        lines = raw.splitlines()
        if not lines:
            raise ValueError(f"empty store file: {path}")
        header = json.loads(lines[0])
        if header.get("version") != STORE_VERSION:
            raise ValueError(f"unsupported store version: {header.get('version')!r}")
        streams: list[Stream] = []
        seq = 0
        for lineno, text in enumerate(lines[1:], start=2):
            record = json.loads(text)
            if "labels" in record:
                streams.append(Stream(record["labels"]))
            elif "e" in record:
                if not streams:
                    raise ValueError(f"{path}:{lineno}: entry before any stream")
                ts, line = record["e"]
                streams[-1].entries.append(StoredEntry(ts, line, seq))
                seq += 1
            else:
                raise ValueError(f"{path}:{lineno}: unrecognized record")
        return cls(streams, header["application"], ns_from_rfc3339(header["anchor"]))
