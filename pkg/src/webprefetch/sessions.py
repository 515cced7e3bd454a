"""Inactivity-timeout sessionization of cleaned access records.

A session is one user's contiguous page-visit run: a new session starts
whenever the gap between consecutive requests exceeds the timeout
(30 minutes by default). Dwell time of each page is the gap to the next
request; the exit page gets a configurable default since the log cannot
observe it.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable

from .logs import LogRecord, PageInterner

DEFAULT_GAP_SECONDS = 30 * 60.0
DEFAULT_EXIT_DWELL_SECONDS = 30.0


@dataclass(frozen=True)
class Visit:
    page: int
    at: datetime
    dwell: float


@dataclass(frozen=True)
class Session:
    """Ordered page visits of one user inside a single inactivity window."""

    user_key: str
    visits: tuple[Visit, ...]

    @property
    def start(self) -> datetime:
        return self.visits[0].at

    @property
    def end(self) -> datetime:
        return self.visits[-1].at

    @property
    def pages(self) -> tuple[int, ...]:
        return tuple(v.page for v in self.visits)

    def __len__(self) -> int:
        return len(self.visits)


def sessionize(records: Iterable[LogRecord],
               interner: PageInterner,
               gap_seconds: float = DEFAULT_GAP_SECONDS,
               exit_dwell_seconds: float = DEFAULT_EXIT_DWELL_SECONDS,
               ) -> list[Session]:
    """Partition records into per-user sessions split at inactivity gaps.

    Records need not arrive sorted; each user's stream is stably sorted by
    timestamp first (ties keep input order). Every record lands in exactly
    one session. Result is ordered by (user_key, session start).
    """
    if gap_seconds <= 0:
        raise ValueError("gap_seconds must be positive")
    by_user: dict[str, list[LogRecord]] = {}
    for record in records:
        by_user.setdefault(record.client_ip, []).append(record)

    sessions: list[Session] = []
    for user_key in sorted(by_user):
        stream = sorted(by_user[user_key], key=lambda r: r.timestamp)
        runs: list[list[LogRecord]] = []
        for record in stream:
            if runs and (record.timestamp - runs[-1][-1].timestamp
                         ).total_seconds() <= gap_seconds:
                runs[-1].append(record)
            else:
                runs.append([record])
        for run in runs:
            visits = []
            for i, record in enumerate(run):
                if i + 1 < len(run):
                    dwell = (run[i + 1].timestamp - record.timestamp).total_seconds()
                else:
                    dwell = exit_dwell_seconds
                visits.append(Visit(interner.intern(record.resource),
                                    record.timestamp, dwell))
            sessions.append(Session(user_key, tuple(visits)))
    return sessions


def dwell_profile(session: Session) -> tuple[float, dict[int, float]]:
    """Total dwell seconds plus dwell summed per distinct page."""
    per_page: dict[int, float] = {}
    total = 0.0
    for visit in session.visits:
        total += visit.dwell
        per_page[visit.page] = per_page.get(visit.page, 0.0) + visit.dwell
    return total, per_page


def _format_dwell(dwell: float) -> str:
    return str(int(dwell)) if dwell == int(dwell) else repr(dwell)


def dump_sessions(sessions: Iterable[Session], interner: PageInterner) -> str:
    """Tab-separated debug/fixture dump, one session per line."""
    lines = []
    for s in sessions:
        visits = ",".join(f"{interner.name(v.page)}:{_format_dwell(v.dwell)}"
                          for v in s.visits)
        lines.append(f"{s.user_key}\t{s.start.isoformat()}\t{s.end.isoformat()}\t{visits}")
    return "".join(line + "\n" for line in lines)


def load_sessions(text: str, interner: PageInterner) -> list[Session]:
    """Inverse of dump_sessions; visit times are rebuilt from start + dwells."""
    sessions = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"session dump line {line_no}: expected 4 fields")
        user_key, start_text, end_text, visits_text = parts
        at = datetime.fromisoformat(start_text)
        end = datetime.fromisoformat(end_text)
        visits = []
        entries = visits_text.split(",")
        for i, entry in enumerate(entries):
            name, _, dwell_text = entry.rpartition(":")
            if not name:
                raise ValueError(f"session dump line {line_no}: bad visit {entry!r}")
            dwell = float(dwell_text)
            visits.append(Visit(interner.intern(name), at, dwell))
            if i + 1 < len(entries):
                at = at + timedelta(seconds=dwell)
        if visits and visits[-1].at != end:
            raise ValueError(f"session dump line {line_no}: end mismatch")
        sessions.append(Session(user_key, tuple(visits)))
    return sessions
