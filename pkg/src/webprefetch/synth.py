"""Seeded synthetic traces with planted navigation patterns.

Real group-client logs are not shippable, so fixtures and benchmarks use
generated traces whose ground truth is known: clients mostly walk planted
page chains (continuing with a configurable follow probability) and
occasionally wander to noise pages or idle long enough to split a session.
Same spec, same bytes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from .logs import LogRecord, render_record

TRACE_EPOCH = datetime(2010, 3, 12, 8, 0, 0, tzinfo=timezone.utc)


@dataclass(frozen=True)
class TraceSpec:
    seed: int = 0
    total_requests: int = 5000
    clients: int = 250
    pattern_count: int = 4
    pattern_length: int = 4
    noise_pages: int = 8
    follow_probability: float = 0.8
    noise_probability: float = 0.15
    min_think_seconds: int = 10
    max_think_seconds: int = 60
    session_break_probability: float = 0.02
    network: str = "10.0"  # clients live in {network}.x.y

    def __post_init__(self) -> None:
        if self.total_requests < 1 or self.clients < 1:
            raise ValueError("need at least one request and one client")
        if self.pattern_count < 1 or self.pattern_length < 2:
            raise ValueError("patterns must have at least 2 pages")
        if not 0.0 <= self.follow_probability <= 1.0:
            raise ValueError("follow probability must be in [0, 1]")
        if self.min_think_seconds < 1 or self.max_think_seconds < self.min_think_seconds:
            raise ValueError("bad think-time range")

    @property
    def pattern_pages(self) -> list[list[str]]:
        return [[f"/site/p{i}_{j}.html" for j in range(self.pattern_length)]
                for i in range(self.pattern_count)]

    @property
    def all_pages(self) -> list[str]:
        pages = [p for pattern in self.pattern_pages for p in pattern]
        pages.extend(f"/site/n{k}.html" for k in range(self.noise_pages))
        return pages


def generate_trace(spec: TraceSpec) -> list[LogRecord]:
    """Build the trace records, time-ordered, fully determined by the spec."""
    rng = random.Random(spec.seed)
    patterns = spec.pattern_pages
    noise = [f"/site/n{k}.html" for k in range(spec.noise_pages)]
    sizes = {page: rng.randrange(400, 4000) for page in spec.all_pages}

    per_client = [spec.total_requests // spec.clients] * spec.clients
    for i in range(spec.total_requests % spec.clients):
        per_client[i] += 1

    records: list[LogRecord] = []
    for c, quota in enumerate(per_client):
        ip = f"{spec.network}.{c // 250}.{c % 250 + 1}"
        at = TRACE_EPOCH + timedelta(seconds=rng.randrange(0, 600))
        pattern: list[str] | None = None
        pos = 0
        for _ in range(quota):
            if (pattern is not None and pos + 1 < len(pattern)
                    and rng.random() < spec.follow_probability):
                pos += 1
            elif noise and rng.random() < spec.noise_probability:
                pattern, pos = None, 0
            else:
                pattern = patterns[rng.randrange(len(patterns))]
                pos = 0
            page = pattern[pos] if pattern is not None else noise[rng.randrange(len(noise))]
            records.append(LogRecord(client_ip=ip, timestamp=at, method="GET",
                                     resource=page, status=200,
                                     bytes=sizes[page], protocol="HTTP/1.0"))
            think = rng.randrange(spec.min_think_seconds, spec.max_think_seconds + 1)
            if rng.random() < spec.session_break_probability:
                think += rng.randrange(1801, 7200)
            at += timedelta(seconds=think)
    records.sort(key=lambda r: r.timestamp)  # stable: ties keep client order
    return records


def trace_lines(spec: TraceSpec) -> list[str]:
    """The same trace rendered as Common Log Format lines."""
    return [render_record(record) for record in generate_trace(spec)]
