"""Access-log parsing and cleaning.

Turns raw server log lines (Common Log Format, with Combined-format
tolerance) into normalized records, then filters them down to the
page-only stream the pattern miner consumes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Iterable, Iterator
from urllib.parse import unquote

MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_MONTH_NUM = {name: i + 1 for i, name in enumerate(MONTHS)}

DEFAULT_IGNORE_SUFFIXES = frozenset(
    {".jpg", ".jpeg", ".gif", ".png", ".css", ".js", ".ico"})
DEFAULT_KEEP_STATUS_CLASSES = frozenset({2, 3})
DEFAULT_KEEP_METHODS = frozenset({"GET"})

_TIMESTAMP_RE = re.compile(
    r"^(\d{2})/([A-Za-z]{3})/(\d{4}):(\d{2}):(\d{2}):(\d{2}) ([+-])(\d{2})(\d{2})$")

# host ident authuser [date] "request" status bytes, optionally followed by
# the Combined-format referrer/agent fields.
_COMMON_RE = re.compile(
    r'^(?P<ip>\S+) (?P<ident>\S+) (?P<user>\S+) \[(?P<ts>[^\]]+)\]'
    r' "(?P<request>[^"]*)" (?P<status>\S+) (?P<bytes>\S+)'
    r'(?: "(?P<referrer>[^"]*)" "(?P<agent>[^"]*)")?\s*$')
_COMBINED_RE = re.compile(
    r'^(?P<ip>\S+) (?P<ident>\S+) (?P<user>\S+) \[(?P<ts>[^\]]+)\]'
    r' "(?P<request>[^"]*)" (?P<status>\S+) (?P<bytes>\S+)'
    r' "(?P<referrer>[^"]*)" "(?P<agent>[^"]*)"\s*$')


@dataclass(frozen=True)
class LogFormat:
    """A named line format: its regex must expose ip/ts/request/status/bytes groups."""

    name: str
    pattern: re.Pattern


COMMON = LogFormat("common", _COMMON_RE)
COMBINED = LogFormat("combined", _COMBINED_RE)
FORMATS = {f.name: f for f in (COMMON, COMBINED)}


@dataclass(frozen=True)
class LogRecord:
    """One parsed access-log line with a normalized resource path."""

    client_ip: str
    timestamp: datetime
    method: str
    resource: str
    status: int
    bytes: int
    protocol: str


@dataclass(frozen=True)
class ParseDiagnostic:
    """Why a particular input line did not become a record."""

    line_no: int
    reason: str
    line: str


class PageInterner:
    """Bijective map between normalized resource strings and dense integer ids.

    Ids are assigned in first-appearance order and are stable for the
    lifetime of the instance.
    """

    def __init__(self) -> None:
        self._id_by_name: dict[str, int] = {}
        self._names: list[str] = []

    def intern(self, name: str) -> int:
        page = self._id_by_name.get(name)
        if page is None:
            page = len(self._names)
            self._id_by_name[name] = page
            self._names.append(name)
        return page

    def get(self, name: str) -> int | None:
        """Id for an already-interned name, or None."""
        return self._id_by_name.get(name)

    def name(self, page: int) -> str:
        return self._names[page]

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._id_by_name

    def names(self) -> tuple[str, ...]:
        return tuple(self._names)


def normalize_resource(raw: str) -> str:
    """Canonicalize a request target to page identity.

    Strips the query string and fragment, percent-decodes once, collapses
    duplicate slashes, and lowercases host-less paths so that parameter and
    case noise does not fragment the pattern space.
    """
    target = raw.split("#", 1)[0].split("?", 1)[0]
    target = unquote(target, errors="replace")
    target = re.sub(r"/{2,}", "/", target)
    if "://" not in target:
        target = target.lower()
    return target


# Characters that would corrupt the single-line log format on render; each
# maps to the escape that one percent-decode undoes.
_RENDER_ESCAPES = (("%", "%25"), (" ", "%20"), ('"', "%22"),
                   ("\t", "%09"), ("\r", "%0D"), ("\n", "%0A"))


def _escape_resource(resource: str) -> str:
    for char, escape in _RENDER_ESCAPES:
        resource = resource.replace(char, escape)
    return resource


def parse_timestamp(text: str) -> datetime:
    """Parse the CLF ``dd/Mon/yyyy:HH:MM:SS +zzzz`` timestamp (locale-free)."""
    m = _TIMESTAMP_RE.match(text)
    if m is None:
        raise ValueError(f"unparseable timestamp: {text!r}")
    day, mon, year, hh, mm, ss, sign, oh, om = m.groups()
    month = _MONTH_NUM.get(mon)
    if month is None:
        raise ValueError(f"unparseable timestamp: unknown month {mon!r}")
    offset = timedelta(hours=int(oh), minutes=int(om))
    if sign == "-":
        offset = -offset
    try:
        return datetime(int(year), month, int(day), int(hh), int(mm), int(ss),
                        tzinfo=timezone(offset))
    except ValueError as exc:
        raise ValueError(f"unparseable timestamp: {exc}") from None


def render_timestamp(ts: datetime) -> str:
    offset = ts.utcoffset() or timedelta(0)
    total = int(offset.total_seconds())
    sign = "+" if total >= 0 else "-"
    total = abs(total)
    return (f"{ts.day:02d}/{MONTHS[ts.month - 1]}/{ts.year:04d}:"
            f"{ts.hour:02d}:{ts.minute:02d}:{ts.second:02d} "
            f"{sign}{total // 3600:02d}{(total % 3600) // 60:02d}")


def parse_line(line: str, fmt: LogFormat = COMMON) -> LogRecord:
    """Parse one log line; raises ValueError with the failure reason."""
    m = fmt.pattern.match(line)
    if m is None:
        raise ValueError("line does not match log format")
    ts = parse_timestamp(m.group("ts"))
    request = m.group("request").split(" ")
    if len(request) != 3:
        raise ValueError("malformed request field (need method, target, protocol)")
    method, target, protocol = request
    if not target:
        raise ValueError("empty request target")
    status_text = m.group("status")
    if not status_text.isdigit():
        raise ValueError(f"non-numeric status: {status_text!r}")
    bytes_text = m.group("bytes")
    if bytes_text == "-":
        size = 0
    elif bytes_text.isdigit():
        size = int(bytes_text)
    else:
        raise ValueError(f"non-numeric bytes: {bytes_text!r}")
    resource = normalize_resource(target)
    if not resource:
        raise ValueError("resource normalized to empty string")
    return LogRecord(client_ip=m.group("ip"), timestamp=ts, method=method,
                     resource=resource, status=int(status_text), bytes=size,
                     protocol=protocol)


def parse_log(lines: Iterable[str],
              fmt: LogFormat = COMMON,
              ) -> tuple[list[LogRecord], list[ParseDiagnostic]]:
    """Parse a text stream into records plus per-line diagnostics.

    Every input line lands in exactly one of the two outputs; malformed
    lines are reported with their 1-based line number, never dropped.
    """
    records: list[LogRecord] = []
    diagnostics: list[ParseDiagnostic] = []
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\r\n")
        if not stripped.strip():
            diagnostics.append(ParseDiagnostic(line_no, "blank line", stripped))
            continue
        try:
            records.append(parse_line(stripped, fmt))
        except ValueError as exc:
            diagnostics.append(ParseDiagnostic(line_no, str(exc), stripped))
    return records, diagnostics


def render_record(record: LogRecord) -> str:
    """Render a record back to its Common Log Format line.

    Delimiter characters inside the resource are percent-escaped so that
    parse(render(r)) reproduces r exactly.
    """
    return (f"{record.client_ip} - - [{render_timestamp(record.timestamp)}] "
            f'"{record.method} {_escape_resource(record.resource)} {record.protocol}" '
            f"{record.status} {record.bytes}")


def clean(records: Iterable[LogRecord],
          ignore_suffixes: frozenset[str] = DEFAULT_IGNORE_SUFFIXES,
          keep_status_classes: frozenset[int] = DEFAULT_KEEP_STATUS_CLASSES,
          keep_methods: frozenset[str] | None = DEFAULT_KEEP_METHODS,
          ) -> list[LogRecord]:
    """Drop non-page records: embedded assets, error responses, non-GET verbs.

    Pure order-preserving filter; suffixes are matched case-insensitively,
    statuses by their hundreds class. keep_methods=None keeps every verb.
    """
    if not ignore_suffixes:
        raise ValueError("ignore_suffixes must be non-empty")
    suffixes = tuple(s.lower() for s in ignore_suffixes)
    kept = []
    for record in records:
        lowered = record.resource.lower()
        if lowered.endswith(suffixes):
            continue
        if record.status // 100 not in keep_status_classes:
            continue
        if keep_methods is not None and record.method not in keep_methods:
            continue
        kept.append(record)
    return kept


def iter_interned(records: Iterable[LogRecord],
                  interner: PageInterner) -> Iterator[tuple[LogRecord, int]]:
    """Pair each record with the interned id of its resource."""
    for record in records:
        yield record, interner.intern(record.resource)
