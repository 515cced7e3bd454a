"""Rough-set filtering of sessions.

Sessions become objects of an information system whose attributes are
per-page dwell buckets. The indiscernibility partition over those
attributes yields lower/upper approximations of a high-dwell target set;
the lower approximation is the set of sessions that can be certified as
quality sessions, and only those feed the rule miner.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .sessions import Session, dwell_profile

DEFAULT_BUCKET_THRESHOLDS = (0.0, 60.0)
DEFAULT_TARGET_QUANTILE = 0.5


@dataclass(frozen=True)
class DwellBuckets:
    """Discretization of per-page dwell into attribute values.

    Bucket 0 means the page was not visited; a visited page with dwell d
    falls into bucket i+1 where thresholds[i] is the greatest threshold <= d
    (clamped to bucket 1 below the first threshold).
    """

    thresholds: tuple[float, ...] = DEFAULT_BUCKET_THRESHOLDS

    def __post_init__(self) -> None:
        if len(self.thresholds) < 2:
            raise ValueError("bucketing needs at least 2 thresholds")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("bucket thresholds must be strictly increasing")

    def bucket(self, dwell: float) -> int:
        return max(1, bisect_right(self.thresholds, dwell))


@dataclass(frozen=True)
class InformationSystem:
    """Finite universe of session ids with total discrete-valued attributes."""

    universe: tuple[int, ...]
    attributes: tuple[int, ...]
    rows: tuple[tuple[int, ...], ...]  # rows[i][j] = value of universe[i] on attributes[j]
    _col: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.universe:
            raise ValueError("universe must be non-empty")
        if len(self.rows) != len(self.universe):
            raise ValueError("one row per object required")
        if any(len(row) != len(self.attributes) for row in self.rows):
            raise ValueError("value_of must be total over universe x attributes")
        object.__setattr__(self, "_col",
                           {a: j for j, a in enumerate(self.attributes)})

    def value_of(self, session_id: int, attribute: int) -> int:
        return self.rows[self.universe.index(session_id)][self._col[attribute]]

    def to_csv(self, names: Sequence[str] | None = None) -> str:
        """Matrix dump for inspection: rows = sessions, columns = attributes."""
        header = ["session"] + [names[a] if names else str(a) for a in self.attributes]
        lines = [",".join(header)]
        for sid, row in zip(self.universe, self.rows):
            lines.append(",".join([str(sid)] + [str(v) for v in row]))
        return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class Partition:
    """Equivalence classes of an indiscernibility relation."""

    blocks: tuple[frozenset[int], ...]

    @property
    def universe(self) -> frozenset[int]:
        return frozenset().union(*self.blocks)

    def block_of(self, session_id: int) -> frozenset[int]:
        for block in self.blocks:
            if session_id in block:
                return block
        raise KeyError(session_id)


@dataclass(frozen=True)
class Approximations:
    lower: frozenset[int]
    upper: frozenset[int]

    @property
    def boundary(self) -> frozenset[int]:
        return self.upper - self.lower


def build_information_system(sessions: Sequence[Session],
                             buckets: DwellBuckets = DwellBuckets(),
                             min_page_support: int = 1) -> InformationSystem:
    """Session ids x page attributes, valued by dwell bucket (0 = unvisited).

    Attributes are the pages visited in at least min_page_support sessions,
    in ascending page-id order; session ids are input positions.
    """
    if not sessions:
        raise ValueError("no sessions to build an information system from")
    profiles = [dwell_profile(s)[1] for s in sessions]
    support: dict[int, int] = {}
    for per_page in profiles:
        for page in per_page:
            support[page] = support.get(page, 0) + 1
    attributes = tuple(sorted(p for p, n in support.items() if n >= min_page_support))
    rows = tuple(
        tuple(buckets.bucket(per_page[a]) if a in per_page else 0 for a in attributes)
        for per_page in profiles)
    return InformationSystem(tuple(range(len(sessions))), attributes, rows)


def indiscernibility_partition(system: InformationSystem,
                               b: Iterable[int]) -> Partition:
    """Partition the universe by agreement on every attribute in B.

    Two objects share a block iff their values coincide on all of B; the
    induced relation is an equivalence, so blocks are disjoint and cover
    the universe.
    """
    chosen = tuple(b)
    if not chosen:
        raise ValueError("attribute subset B must be non-empty")
    unknown = [a for a in chosen if a not in system._col]
    if unknown:
        raise ValueError(f"unknown attributes in B: {unknown}")
    cols = [system._col[a] for a in chosen]
    groups: dict[tuple[int, ...], list[int]] = {}
    for sid, row in zip(system.universe, system.rows):
        groups.setdefault(tuple(row[c] for c in cols), []).append(sid)
    blocks = sorted(groups.values(), key=min)
    return Partition(tuple(frozenset(block) for block in blocks))


def _check_target(partition: Partition, target: frozenset[int]) -> None:
    if not target <= partition.universe:
        raise ValueError("target set must be a subset of the universe")


def lower_approximation(partition: Partition,
                        target: Iterable[int]) -> frozenset[int]:
    """Union of the blocks entirely contained in the target set."""
    wanted = frozenset(target)
    _check_target(partition, wanted)
    return frozenset().union(*(b for b in partition.blocks if b <= wanted))


def upper_approximation(partition: Partition,
                        target: Iterable[int]) -> frozenset[int]:
    """Union of the blocks intersecting the target set."""
    wanted = frozenset(target)
    _check_target(partition, wanted)
    return frozenset().union(*(b for b in partition.blocks if b & wanted))


def approximate(partition: Partition, target: Iterable[int]) -> Approximations:
    wanted = frozenset(target)
    return Approximations(lower=lower_approximation(partition, wanted),
                          upper=upper_approximation(partition, wanted))


def dwell_quantile_threshold(totals: Sequence[float], quantile: float) -> float:
    """Lower order statistic of the total-dwell distribution."""
    if not 0.0 <= quantile <= 1.0:
        raise ValueError("quantile must be in [0, 1]")
    ordered = sorted(totals)
    return ordered[math.floor(quantile * (len(ordered) - 1))]


@dataclass(frozen=True)
class QualitySelection:
    """Outcome of rough-set session selection, with provenance for reports."""

    sessions: tuple[Session, ...]
    selected_ids: frozenset[int]
    target_ids: frozenset[int]
    approximations: Approximations
    system: InformationSystem
    dwell_threshold: float
    fallback_used: bool


def select_quality_sessions(sessions: Sequence[Session],
                            buckets: DwellBuckets = DwellBuckets(),
                            target_quantile: float = DEFAULT_TARGET_QUANTILE,
                            min_page_support: int = 1) -> QualitySelection:
    """Keep the sessions certified to belong to the high-dwell target set.

    The target set is the sessions whose total dwell reaches the configured
    quantile of the dwell distribution; selection is its lower approximation
    under the all-attributes partition. An empty lower approximation falls
    back to the raw target set, flagged in the result.
    """
    if not sessions:
        raise ValueError("no sessions to select from")
    system = build_information_system(sessions, buckets, min_page_support)
    totals = [dwell_profile(s)[0] for s in sessions]
    threshold = dwell_quantile_threshold(totals, target_quantile)
    target = frozenset(i for i, total in enumerate(totals) if total >= threshold)
    if system.attributes:
        partition = indiscernibility_partition(system, system.attributes)
    else:
        # No page reaches min_page_support: nothing discerns the sessions.
        partition = Partition((frozenset(system.universe),))
    approx = approximate(partition, target)
    fallback = not approx.lower
    selected = target if fallback else approx.lower
    return QualitySelection(
        sessions=tuple(s for i, s in enumerate(sessions) if i in selected),
        selected_ids=selected,
        target_ids=target,
        approximations=approx,
        system=system,
        dwell_threshold=threshold,
        fallback_used=fallback)
