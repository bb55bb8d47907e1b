"""Raw log files -> label-indexed store.

Templates (hand-written to LogHub conventions) drive extraction: a template's
regex names the timestamp group, optional metadata groups that become labels,
and an optional `content` group that becomes the stored line.  Timestamps are
rebased so the newest entry lands exactly on the corpus anchor, preserving
every pairwise delta.

Template file format (full example in docs/formats.md): blank-line-separated
blocks of `key value` lines —

    template ssh-auth
    pattern ^(?P<ts>\\w{3} +\\d+ \\d{2}:\\d{2}:\\d{2}) (?P<hostname>\\S+) sshd\\[\\d+\\]: (?P<content>.*)$
    ts_format %b %d %H:%M:%S
    label level=info
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .logql.ast import LABEL_NAME_RE
from .store import LogEntry, LogStore
from .timefmt import NS_PER_SECOND, ns_from_datetime, ns_from_rfc3339, now_ns


class IngestError(Exception):
    pass


class TemplateError(IngestError):
    def __init__(self, path: str | Path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


@dataclass
class LogTemplate:
    id: str
    pattern: re.Pattern[str]
    ts_format: str
    ts_group: str = "ts"
    static_labels: dict[str, str] = field(default_factory=dict)
    level_group: str | None = None
    component_group: str | None = None


@dataclass
class CorpusManifest:
    application: str
    files: list[Path]
    templates: Path
    default_labels: dict[str, str]
    anchor: str = "now"  # "now" or RFC 3339

    @classmethod
    def load(cls, path: str | Path) -> "CorpusManifest":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent
        manifest = cls(
            application=data["application"],
            files=[base / f for f in data["files"]],
            templates=base / data["templates"],
            default_labels=dict(data.get("default_labels", {})),
            anchor=data.get("anchor", "now"),
        )
        manifest.check()
        return manifest

    def check(self) -> None:
        if not self.files:
            raise IngestError("manifest lists no log files")
        if "application" not in self.default_labels:
            raise IngestError("default_labels must include 'application'")
        for name in self.default_labels:
            if not LABEL_NAME_RE.match(name):
                raise IngestError(f"invalid default label name {name!r}")

    def anchor_ns(self) -> int:
        if self.anchor == "now":
            return now_ns()
        return ns_from_rfc3339(self.anchor)


@dataclass
class IngestReport:
    lines_read: int = 0
    matched: int = 0
    unmatched: int = 0
    rejected: int = 0  # matched a template but the timestamp would not parse
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "matched": self.matched,
            "unmatched": self.unmatched,
            "rejected": self.rejected,
            "warnings": self.warnings,
        }


# ---------------------------------------------------------------------------
# Template parsing


def parse_templates(path: str | Path) -> list[LogTemplate]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read template file {path}: {exc}") from exc

    templates: list[LogTemplate] = []
    current: dict[str, object] | None = None
    start_line = 0

    def finish(lineno: int) -> None:
        nonlocal current
        if current is None:
            return
        for key in ("id", "pattern", "ts_format"):
            if key not in current:
                raise TemplateError(path, start_line, f"template block missing '{key}'")
        tpl = LogTemplate(
            id=current["id"],
            pattern=current["pattern"],
            ts_format=current["ts_format"],
            ts_group=current.get("ts_group", "ts"),
            static_labels=current.get("labels", {}),
            level_group=current.get("level_group"),
            component_group=current.get("component_group"),
        )
        if tpl.ts_group not in tpl.pattern.groupindex:
            raise TemplateError(
                path, start_line, f"pattern has no capture group (?P<{tpl.ts_group}>...)"
            )
        if any(t.id == tpl.id for t in templates):
            raise TemplateError(path, start_line, f"duplicate template id {tpl.id!r}")
        templates.append(tpl)
        current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip():
            finish(lineno)
            continue
        if line.lstrip().startswith("#"):
            continue
        parts = line.split(None, 1)
        key = parts[0]
        value = parts[1] if len(parts) > 1 else ""
        if key == "template":
            finish(lineno)
            if not value:
                raise TemplateError(path, lineno, "template line needs an id")
            current = {"id": value, "labels": {}}
            start_line = lineno
            continue
        if current is None:
            raise TemplateError(path, lineno, "expected 'template <id>' to open a block")
        if key == "pattern":
            try:
                current["pattern"] = re.compile(value)
            except re.error as exc:
                raise TemplateError(path, lineno, f"bad pattern: {exc}") from exc
        elif key == "ts_format":
            current["ts_format"] = value
        elif key == "ts_group":
            current["ts_group"] = value
        elif key == "label":
            if "=" not in value:
                raise TemplateError(path, lineno, "label line must be key=value")
            name, _, val = value.partition("=")
            if not LABEL_NAME_RE.match(name):
                raise TemplateError(path, lineno, f"invalid label name {name!r}")
            current["labels"][name] = val
        elif key in ("level_group", "component_group"):
            current[key] = value
        else:
            raise TemplateError(path, lineno, f"unknown template key {key!r}")
    finish(len(text.splitlines()) + 1)

    if not templates:
        raise TemplateError(path, 1, "template file defines no templates")
    return templates


# ---------------------------------------------------------------------------
# Entry extraction


def _parse_template_ts(value: str, fmt: str) -> int:
    # Formats without a year (classic syslog) get year 2000: a leap year, so
    # "Feb 29" parses, and rebasing discards the absolute value anyway.
    if "%Y" not in fmt and "%y" not in fmt:
        value = "2000 " + value
        fmt = "%Y " + fmt
    return ns_from_datetime(datetime.strptime(value, fmt))


class TimestampError(IngestError):
    pass


def extract_entry(
    raw: str,
    templates: list[LogTemplate],
    defaults: dict[str, str],
    fallback_ts: int = 1,
) -> LogEntry:
    """Extract one entry; the first matching template in file order wins.

    Labels are defaults plus every named capture except the timestamp group
    and `content`; `content`, when captured, becomes the stored line.  Lines
    matching no template keep their full text and get template="none" (they
    must stay findable by line filters) with `fallback_ts` as timestamp.
    Raises TimestampError when a matched timestamp does not parse.
    """
    if not raw:
        raise ValueError("empty log line")
    for tpl in templates:
        m = tpl.pattern.search(raw)
        if m is None:
            continue
        groups = m.groupdict()
        ts_text = groups.get(tpl.ts_group)
        if ts_text is None:
            raise TimestampError(f"template {tpl.id}: timestamp group matched nothing")
        try:
            ts = _parse_template_ts(ts_text, tpl.ts_format)
        except ValueError as exc:
            raise TimestampError(f"template {tpl.id}: {exc}") from exc
        labels = dict(defaults)
        labels.update(tpl.static_labels)
        for name, value in groups.items():
            if name in (tpl.ts_group, "content") or value is None:
                continue
            if name == tpl.level_group:
                labels["level"] = value
            elif name == tpl.component_group:
                labels["component"] = value
            else:
                labels[name] = value
        line = groups.get("content")
        return LogEntry(ts, labels, line if line is not None else raw)
    if not defaults:
        raise IngestError("unmatched line needs default labels (application at least)")
    labels = dict(defaults)
    labels["template"] = "none"
    return LogEntry(fallback_ts, labels, raw)


# ---------------------------------------------------------------------------
# Rebasing and ingest


def rebase_timestamps(entries: list[LogEntry], anchor_ns: int) -> list[LogEntry]:
    """Shift every timestamp by one constant so max(ts) == anchor."""
    if not entries:
        raise ValueError("nothing to rebase")
    shift = anchor_ns - max(e.ts for e in entries)
    return [LogEntry(e.ts + shift, e.labels, e.line) for e in entries]


def ingest(manifest: CorpusManifest) -> tuple[LogStore, IngestReport]:
    manifest.check()
    templates = parse_templates(manifest.templates)
    report = IngestReport()
    entries: list[LogEntry] = []
    matched_flags: list[bool] = []

    for file in manifest.files:
        try:
            text = file.read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"cannot read log file {file}: {exc}") from exc
        for raw in text.splitlines():
            report.lines_read += 1
            if not raw.strip():
                continue
            try:
                entry = extract_entry(raw, templates, manifest.default_labels, fallback_ts=-1)
            except TimestampError as exc:
                report.rejected += 1
                if len(report.warnings) < 20:
                    report.warnings.append(str(exc))
                continue
            matched = entry.labels.get("template") != "none"
            report.matched += matched
            report.unmatched += not matched
            entries.append(entry)
            matched_flags.append(matched)

    if not entries:
        raise IngestError("corpus is empty: no log entries found")

    # Unmatched lines carry no source timestamp: forward-fill from the last
    # matched line, backfill leading ones from the first match (1 s epoch if
    # nothing matched at all), then add the global per-line nanosecond offset
    # that keeps file order and makes every timestamp unique.
    matched_ts = [e.ts for e, ok in zip(entries, matched_flags) if ok]
    fill = matched_ts[0] if matched_ts else NS_PER_SECOND
    for i, entry in enumerate(entries):
        if matched_flags[i]:
            fill = entry.ts
        else:
            entry.ts = fill
        entry.ts += i

    anchor = manifest.anchor_ns()
    entries = rebase_timestamps(entries, anchor)
    store = LogStore.build(entries, manifest.application, anchor)
    return store, report
