"""Group-client prefetching agent and simulated client cache.

Each group of client IP ranges gets an agent that follows the request
stream through the mined rule sequences: a request matching the head of a
rule activates that sequence, its successors enter the bounded hint list,
and the page loader materializes hints into the client's LRU cache. A
request that breaks the followed sequence clears the hints and re-matches
from the recent-access window; a request matching nothing becomes a logged
crawl event.
"""

from __future__ import annotations

import ipaddress
from collections import OrderedDict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .mining import MarkovRule, rule_confidence
from .repository import RuleRepository

DEFAULT_CACHE_CAPACITY = 64
DEFAULT_HINT_CAPACITY = 16
DEFAULT_WINDOW = 3
DEFAULT_PAGE_BYTES = 2048


@dataclass(frozen=True)
class GroupClientConfig:
    """One group-client: its IP ranges plus per-agent parameter overrides."""

    group_id: str
    cidrs: tuple[str, ...]
    hint_capacity: int | None = None
    window: int | None = None
    networks: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.cidrs:
            raise ValueError(f"group {self.group_id}: needs at least one CIDR")
        try:
            nets = tuple(ipaddress.ip_network(c, strict=False) for c in self.cidrs)
        except ValueError as exc:
            raise ValueError(f"group {self.group_id}: {exc}") from None
        object.__setattr__(self, "networks", nets)


def validate_groups(groups: Sequence[GroupClientConfig]) -> None:
    """Reject duplicate ids and IP ranges overlapping across groups."""
    seen_ids = set()
    for group in groups:
        if group.group_id in seen_ids:
            raise ValueError(f"duplicate group id {group.group_id!r}")
        seen_ids.add(group.group_id)
    for i, a in enumerate(groups):
        for b in groups[i + 1:]:
            for na in a.networks:
                for nb in b.networks:
                    if na.version == nb.version and na.overlaps(nb):
                        raise ValueError(
                            f"groups {a.group_id!r} and {b.group_id!r} overlap "
                            f"on {na} / {nb}")


def ip_match(ip: str, groups: Sequence[GroupClientConfig]) -> str | None:
    """Group id whose CIDR contains the address, else None (no prefetching)."""
    try:
        address = ipaddress.ip_address(ip)
    except ValueError:
        return None
    for group in groups:
        for network in group.networks:
            if address.version == network.version and address in network:
                return group.group_id
    return None


@dataclass
class CacheEntry:
    prefetched: bool
    used: bool
    size: int  # bytes charged at prefetch time; 0 for demand loads


class LruCache:
    """Entry-count LRU cache distinguishing prefetched from demand loads.

    Demand misses evict the least recently used entry; prefetching only
    fills free capacity and never evicts. Unused prefetched bytes are
    accumulated as waste when evicted (or counted at end of replay).
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("cache capacity must be at least 1")
        self.capacity = capacity
        self._entries: OrderedDict[int, CacheEntry] = OrderedDict()
        self.evicted_unused_prefetch_bytes = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, page: int) -> bool:
        return page in self._entries

    def access(self, page: int) -> tuple[bool, bool]:
        """Serve a request: (hit, hit consumed a not-yet-used prefetched entry)."""
        entry = self._entries.get(page)
        if entry is None:
            return False, False
        first_use = entry.prefetched and not entry.used
        entry.used = True
        self._entries.move_to_end(page)
        return True, first_use

    def demand_insert(self, page: int) -> None:
        if page in self._entries:
            self._entries.move_to_end(page)
            return
        if len(self._entries) >= self.capacity:
            _, evicted = self._entries.popitem(last=False)
            if evicted.prefetched and not evicted.used:
                self.evicted_unused_prefetch_bytes += evicted.size
        self._entries[page] = CacheEntry(prefetched=False, used=True, size=0)

    def prefetch_insert(self, page: int, size: int) -> bool:
        """Insert a hint page if capacity allows; resident pages just refresh."""
        entry = self._entries.get(page)
        if entry is not None:
            self._entries.move_to_end(page)
            return False
        if len(self._entries) >= self.capacity:
            return False
        self._entries[page] = CacheEntry(prefetched=True, used=False, size=size)
        return True

    def resident_unused_prefetch_bytes(self) -> int:
        return sum(e.size for e in self._entries.values()
                   if e.prefetched and not e.used)

    def pages(self) -> tuple[int, ...]:
        return tuple(self._entries)


@dataclass(frozen=True)
class Hint:
    page: int
    source: tuple[tuple[int, ...], tuple[int, ...]]  # (head, tail) of the rule
    priority: Fraction


class HintList:
    """Bounded, priority-ordered, duplicate-free prefetch queue."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("hint capacity must be at least 1")
        self.capacity = capacity
        self._entries: list[Hint] = []

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def pages(self) -> tuple[int, ...]:
        return tuple(h.page for h in self._entries)

    def add(self, page: int, source: tuple, priority: Fraction) -> bool:
        """Insert keeping priorities non-increasing; the first entry for a
        page wins, overflow drops the lowest-priority tail."""
        if any(h.page == page for h in self._entries):
            return False
        position = len(self._entries)
        for i, entry in enumerate(self._entries):
            if entry.priority < priority:
                position = i
                break
        self._entries.insert(position, Hint(page, source, priority))
        if len(self._entries) > self.capacity:
            dropped = self._entries.pop()
            return dropped.page != page
        return True

    def clear(self) -> None:
        self._entries.clear()


class AgentState:
    """Per-client agent memory: recent window, hints, followed sequence."""

    def __init__(self, window: int = DEFAULT_WINDOW,
                 hint_capacity: int = DEFAULT_HINT_CAPACITY) -> None:
        if window < 1:
            raise ValueError("window must be at least 1")
        self.window = window
        self.recent: deque[int] = deque(maxlen=window)
        self.hints = HintList(hint_capacity)
        self.active_rule: MarkovRule | None = None
        self.cursor = -1

    @property
    def active_sequence(self) -> tuple[int, ...] | None:
        return self.active_rule.sequence if self.active_rule is not None else None

    def reset(self) -> None:
        """Session boundary: forget hints, sequence, and the recent window."""
        self.recent.clear()
        self.hints.clear()
        self.active_rule = None
        self.cursor = -1


@dataclass(frozen=True)
class RequestOutcome:
    """Everything one request did to the cache, hints, and counters."""

    page: int
    cache_hit: bool
    hit_was_prefetched: bool
    continued: bool
    matched_head_len: int
    crawl_requested: bool
    prefetched: tuple[int, ...]
    bytes_prefetched: int
    hints_after: tuple[int, ...]


def resolve_conflict(candidates: Iterable[MarkovRule],
                     counts=None,
                     interner=None) -> MarkovRule:
    """Pick among same-head rules: max confidence, then support, then the
    lexicographically smallest tail (by interned name when available)."""
    rules = list(candidates)
    if not rules:
        raise ValueError("no candidate rules")
    if len({r.head for r in rules}) != 1:
        raise ValueError("conflict resolution requires equal heads")

    def confidence(rule: MarkovRule) -> Fraction:
        if counts is not None:
            return rule_confidence(rule.head, rule.tail, counts)
        return rule.confidence

    def tail_key(rule: MarkovRule):
        if interner is not None:
            return tuple(interner.name(p) for p in rule.tail)
        return rule.tail

    return min(rules, key=lambda r: (-confidence(r), -r.support, tail_key(r)))


def page_load(cache: LruCache, hints: Iterable[Hint],
              size_of: Callable[[int], int]) -> tuple[tuple[int, ...], int]:
    """Materialize hints into the cache in priority order.

    Returns the pages actually inserted and their byte total; resident
    pages are refreshed without accounting, and insertion stops silently
    once the cache is full.
    """
    loaded = []
    total = 0
    for hint in hints:
        size = size_of(hint.page)
        if cache.prefetch_insert(hint.page, size):
            loaded.append(hint.page)
            total += size
    return tuple(loaded), total


def _activate(state: AgentState, rule: MarkovRule,
              repo: RuleRepository) -> list[int]:
    """Follow a freshly matched rule: hints get its successors plus the
    successor expansions of rules containing the predicted next page."""
    state.active_rule = rule
    state.cursor = rule.order - 1
    added: list[int] = []
    sequence = rule.sequence
    for successor in sequence[state.cursor + 1:]:
        if state.hints.add(successor, (rule.head, rule.tail), rule.confidence):
            added.append(successor)
    next_page = sequence[state.cursor + 1]
    for other in repo.scan_containing(next_page):
        other_seq = other.sequence
        for i in range(len(other_seq) - 1):
            if other_seq[i] != next_page:
                continue
            for successor in other_seq[i + 1:]:
                if state.hints.add(successor, (other.head, other.tail),
                                   other.confidence):
                    added.append(successor)
    return added


def on_request(state: AgentState, page: int, repo: RuleRepository,
               cache: LruCache,
               size_of: Callable[[int], int] = lambda page: DEFAULT_PAGE_BYTES,
               ) -> RequestOutcome:
    """Serve one request through the agent state machine.

    The state and cache are updated in place; the returned outcome records
    the hit/miss, any sequence transition, the pages prefetched by the
    page loader, and whether the request fell through to the crawler.
    """
    hit, first_use = cache.access(page)
    if not hit:
        cache.demand_insert(page)
    state.recent.append(page)

    continued = False
    matched_len = 0
    crawl = False
    added: list[int] = []

    sequence = state.active_sequence
    if (sequence is not None and state.cursor + 1 < len(sequence)
            and sequence[state.cursor + 1] == page):
        continued = True
        state.cursor += 1
        rule = state.active_rule
        for successor in sequence[state.cursor + 1:]:
            if state.hints.add(successor, (rule.head, rule.tail), rule.confidence):
                added.append(successor)
    else:
        # Sequence broken (or nothing active): clean up and re-match from
        # the recent window, longest suffix first.
        state.hints.clear()
        state.active_rule = None
        state.cursor = -1
        candidates = repo.lookup_by_head(tuple(state.recent))
        if candidates:
            best_head = candidates[0].head
            same_head = [r for r in candidates if r.head == best_head]
            rule = resolve_conflict(same_head, interner=repo.interner)
            matched_len = rule.order
            added = _activate(state, rule, repo)
        else:
            crawl = True

    added_set = set(added)
    to_load = [h for h in state.hints if h.page in added_set]
    prefetched, bytes_prefetched = page_load(cache, to_load, size_of)
    return RequestOutcome(page=page, cache_hit=hit, hit_was_prefetched=first_use,
                          continued=continued, matched_head_len=matched_len,
                          crawl_requested=crawl, prefetched=prefetched,
                          bytes_prefetched=bytes_prefetched,
                          hints_after=state.hints.pages())
