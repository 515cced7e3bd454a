"""Trace replay and evaluation metrics.

Replays a cleaned request trace through per-client agents and LRU caches
(or a plain LRU baseline with prefetching disabled) and reports hit rate,
prefetch precision, bandwidth waste, and crawl fallbacks. Also provides
the search-area arithmetic and the relevancy-repositioning transform used
to quantify how prefetching shrinks the area a user must scan to reach a
result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .agent import (
    DEFAULT_CACHE_CAPACITY,
    DEFAULT_HINT_CAPACITY,
    DEFAULT_PAGE_BYTES,
    DEFAULT_WINDOW,
    AgentState,
    GroupClientConfig,
    LruCache,
    ip_match,
    on_request,
    validate_groups,
)
from .logs import LogRecord
from .repository import RuleRepository
from .sessions import DEFAULT_GAP_SECONDS


@dataclass(frozen=True)
class ReplayConfig:
    cache_capacity: int = DEFAULT_CACHE_CAPACITY
    hint_capacity: int = DEFAULT_HINT_CAPACITY
    window: int = DEFAULT_WINDOW
    session_gap_seconds: float = DEFAULT_GAP_SECONDS
    default_page_bytes: int = DEFAULT_PAGE_BYTES

    def __post_init__(self) -> None:
        if self.cache_capacity < 1 or self.hint_capacity < 1 or self.window < 1:
            raise ValueError("capacities and window must be at least 1")
        if self.session_gap_seconds <= 0:
            raise ValueError("session gap must be positive")
        if self.default_page_bytes < 0:
            raise ValueError("default page bytes must be non-negative")


@dataclass(frozen=True)
class SimReport:
    """Replay counters with exact derived ratios."""

    requests: int = 0
    hits: int = 0
    prefetch_issued: int = 0
    prefetch_used: int = 0
    bytes_prefetched: int = 0
    bytes_wasted: int = 0
    crawl_requests: int = 0
    prefetch_enabled: bool = True

    def __post_init__(self) -> None:
        if self.hits > self.requests:
            raise ValueError("hits cannot exceed requests")
        if self.prefetch_used > self.prefetch_issued:
            raise ValueError("prefetch_used cannot exceed prefetch_issued")
        if self.bytes_wasted > self.bytes_prefetched:
            raise ValueError("bytes_wasted cannot exceed bytes_prefetched")

    @property
    def hit_rate(self) -> Fraction:
        return Fraction(self.hits, self.requests) if self.requests else Fraction(0)

    @property
    def precision(self) -> Fraction:
        if not self.prefetch_issued:
            return Fraction(0)
        return Fraction(self.prefetch_used, self.prefetch_issued)

    def to_dict(self) -> dict:
        return {
            "requests": self.requests,
            "hits": self.hits,
            "prefetch_issued": self.prefetch_issued,
            "prefetch_used": self.prefetch_used,
            "bytes_prefetched": self.bytes_prefetched,
            "bytes_wasted": self.bytes_wasted,
            "crawl_requests": self.crawl_requests,
            "prefetch_enabled": self.prefetch_enabled,
            "hit_rate": f"{self.hit_rate.numerator}/{self.hit_rate.denominator}",
            "precision": f"{self.precision.numerator}/{self.precision.denominator}",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    def to_csv(self) -> str:
        rows = ["metric,value"]
        data = self.to_dict()
        for key in ("requests", "hits", "hit_rate", "prefetch_issued",
                    "prefetch_used", "precision", "bytes_prefetched",
                    "bytes_wasted", "crawl_requests", "prefetch_enabled"):
            rows.append(f"{key},{data[key]}")
        return "".join(row + "\n" for row in rows)

    @classmethod
    def from_json(cls, text: str) -> "SimReport":
        data = json.loads(text)
        report = cls(requests=data["requests"], hits=data["hits"],
                     prefetch_issued=data["prefetch_issued"],
                     prefetch_used=data["prefetch_used"],
                     bytes_prefetched=data["bytes_prefetched"],
                     bytes_wasted=data["bytes_wasted"],
                     crawl_requests=data["crawl_requests"],
                     prefetch_enabled=data["prefetch_enabled"])
        for name in ("hit_rate", "precision"):
            num, _, den = data[name].partition("/")
            if Fraction(int(num), int(den)) != getattr(report, name):
                raise ValueError(f"inconsistent {name} in report")
        return report


@dataclass(frozen=True)
class ReplayEvent:
    """One trace step as seen by the instrumentation hook."""

    index: int
    client_ip: str
    group_id: str | None
    page: int
    cache_hit: bool
    hit_was_prefetched: bool
    continued: bool
    matched_head_len: int
    crawl_requested: bool
    prefetched: tuple[int, ...]
    hints_after: tuple[int, ...]


@dataclass
class _ClientState:
    cache: LruCache
    agent: AgentState | None
    last_at: datetime | None = None


def replay(trace: Sequence[LogRecord],
           repo: RuleRepository,
           groups: Sequence[GroupClientConfig] = (),
           config: ReplayConfig = ReplayConfig(),
           prefetch_enabled: bool = True,
           observer: Callable[[ReplayEvent], None] | None = None) -> SimReport:
    """Deterministically replay a cleaned trace and measure the outcome.

    Each client gets its own cache; clients inside a configured group also
    get an agent driving prefetches from the frozen rule repository (agent
    state resets at session boundaries). With prefetch_enabled=False every
    request is served by the plain per-client LRU baseline, so baseline and
    prefetch reports stay comparable request for request.
    """
    validate_groups(groups)
    repo.freeze()
    interner = repo.interner
    by_id = {g.group_id: g for g in groups}
    sizes: dict[int, int] = {}

    def size_of(page: int) -> int:
        return sizes.get(page, config.default_page_bytes)

    clients: dict[str, _ClientState] = {}
    group_of: dict[str, str | None] = {}
    requests = hits = issued = used = crawls = 0
    bytes_prefetched = 0

    for index, record in enumerate(trace):
        page = interner.intern(record.resource)
        if record.client_ip not in group_of:
            group_of[record.client_ip] = ip_match(record.client_ip, groups)
        group_id = group_of[record.client_ip]
        client = clients.get(record.client_ip)
        if client is None:
            agent = None
            if prefetch_enabled and group_id is not None:
                group = by_id[group_id]
                agent = AgentState(
                    window=group.window or config.window,
                    hint_capacity=group.hint_capacity or config.hint_capacity)
            client = _ClientState(LruCache(config.cache_capacity), agent)
            clients[record.client_ip] = client

        requests += 1
        if client.agent is not None:
            if (client.last_at is not None
                    and (record.timestamp - client.last_at).total_seconds()
                    > config.session_gap_seconds):
                client.agent.reset()
            outcome = on_request(client.agent, page, repo, client.cache, size_of)
            hits += outcome.cache_hit
            used += outcome.hit_was_prefetched
            issued += len(outcome.prefetched)
            bytes_prefetched += outcome.bytes_prefetched
            crawls += outcome.crawl_requested
            event = ReplayEvent(index, record.client_ip, group_id, page,
                                outcome.cache_hit, outcome.hit_was_prefetched,
                                outcome.continued, outcome.matched_head_len,
                                outcome.crawl_requested, outcome.prefetched,
                                outcome.hints_after)
        else:
            hit, _ = client.cache.access(page)
            if not hit:
                client.cache.demand_insert(page)
            hits += hit
            event = ReplayEvent(index, record.client_ip, group_id, page, hit,
                                False, False, 0, False, (), ())
        client.last_at = record.timestamp
        sizes[page] = record.bytes
        if observer is not None:
            observer(event)

    bytes_wasted = sum(c.cache.evicted_unused_prefetch_bytes
                       + c.cache.resident_unused_prefetch_bytes()
                       for c in clients.values())
    return SimReport(requests=requests, hits=hits, prefetch_issued=issued,
                     prefetch_used=used, bytes_prefetched=bytes_prefetched,
                     bytes_wasted=bytes_wasted, crawl_requests=crawls,
                     prefetch_enabled=prefetch_enabled)


# --- search-area arithmetic -------------------------------------------------

def search_area(position: int, page_size: int = 10) -> int:
    """Scan-cost proxy for reaching a listing entry: position x its page number."""
    if position < 1 or page_size < 1:
        raise ValueError("position and page_size must be positive")
    return position * math.ceil(position / page_size)


def search_area_ratio(sa_prime: int, sa: int) -> Fraction:
    """Exact reduction ratio sa'/sa in lowest terms."""
    if sa <= 0:
        raise ValueError("search area must be positive")
    if sa_prime < 0:
        raise ValueError("reduced search area cannot be negative")
    return Fraction(sa_prime, sa)


# --- relevancy repositioning -------------------------------------------------

@dataclass(frozen=True)
class RelevanceListing:
    """Ranked result listing; factor n for position 1 down to 1 for position n."""

    entries: tuple[tuple[int, int], ...]  # (page, relevancy factor)
    page_size: int = 10

    def __post_init__(self) -> None:
        if self.page_size < 1:
            raise ValueError("page_size must be positive")
        n = len(self.entries)
        if [f for _, f in self.entries] != list(range(n, 0, -1)):
            raise ValueError("relevancy factors must run from n down to 1")

    @classmethod
    def ranked(cls, pages: Iterable[int], page_size: int = 10) -> "RelevanceListing":
        ordered = tuple(pages)
        n = len(ordered)
        return cls(tuple((p, n - i) for i, p in enumerate(ordered)), page_size)

    @property
    def pages(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.entries)

    def position_of(self, page: int) -> int:
        """1-based listing position."""
        try:
            return self.pages.index(page) + 1
        except ValueError:
            raise ValueError(f"page {page} not in listing") from None

    def page_number_of(self, page: int) -> int:
        return math.ceil(self.position_of(page) / self.page_size)


def reposition(listing: RelevanceListing, repo: RuleRepository,
               accessed: int) -> RelevanceListing:
    """Promote the rule successors of an accessed page right behind it.

    Pages reachable from `accessed` through the repository's sequences move,
    best confidence first, to the positions immediately after it; everything
    else keeps its relative order and relevancy factors are re-ranked, so the
    output is a permutation of the input listing.
    """
    position = listing.position_of(accessed)  # raises if absent
    ranked: dict[int, tuple] = {}
    for rule in repo.scan_containing(accessed):
        sequence = rule.sequence
        for i in range(len(sequence) - 1):
            if sequence[i] != accessed:
                continue
            for successor in sequence[i + 1:]:
                key = (-rule.confidence, -rule.support,
                       tuple(repo.page_name(p) for p in rule.tail))
                if successor not in ranked or key < ranked[successor]:
                    ranked[successor] = key

    pages = listing.pages
    later = set(pages[position:])  # only pages currently behind `accessed` move up
    promoted = sorted((p for p in ranked if p in later and p != accessed),
                      key=lambda p: (ranked[p], repo.page_name(p)))
    promoted_set = set(promoted)
    reordered = (list(pages[:position]) + promoted
                 + [p for p in pages[position:] if p not in promoted_set])
    return RelevanceListing.ranked(reordered, listing.page_size)
