"""Markov prefetch-rule mining over quality sessions.

Counts every contiguous access subsequence, derives the dynamic minimum
support (half the most frequent multi-page sequence's count), and emits
rules head => tail whose exact conditional probability
count(head + tail) / count(head) reaches the confidence cut-off. A rule's
order is the length of its head, so the emitted set is a collection of
1..max_order Markov predictors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .logs import PageInterner
from .sessions import Session

DEFAULT_CONFIDENCE_CUTOFF = Fraction(1, 2)
DEFAULT_MAX_ORDER = 3
DEFAULT_MAX_TAIL = 2

PatternCounts = Mapping[tuple[int, ...], int]


@dataclass(frozen=True)
class MarkovRule:
    """head => tail with exact support and conditional probability."""

    head: tuple[int, ...]
    tail: tuple[int, ...]
    support: int
    confidence: Fraction

    def __post_init__(self) -> None:
        if not self.head or not self.tail:
            raise ValueError("head and tail must be non-empty")
        if self.support < 1:
            raise ValueError("support must be positive")
        if not 0 < self.confidence <= 1:
            raise ValueError("confidence must be in (0, 1]")

    @property
    def order(self) -> int:
        return len(self.head)

    @property
    def sequence(self) -> tuple[int, ...]:
        return self.head + self.tail


def count_sequences(sessions: Iterable[Session],
                    max_len: int) -> dict[tuple[int, ...], int]:
    """Occurrence counts of every contiguous page subsequence up to max_len.

    Overlapping occurrences count separately: [A, A, A] contributes 3 to A
    and 2 to (A, A).
    """
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    counts: dict[tuple[int, ...], int] = {}
    for session in sessions:
        pages = session.pages
        n = len(pages)
        for start in range(n):
            stop_limit = min(n, start + max_len)
            for stop in range(start + 1, stop_limit + 1):
                key = pages[start:stop]
                counts[key] = counts.get(key, 0) + 1
    return counts


def dynamic_threshold(counts: PatternCounts) -> int:
    """Minimum support: half the top count among length >= 2 patterns.

    A maximum of 6 yields 3. Clamped to 1, also when no multi-page pattern
    was observed at all.
    """
    f_max = 0
    for pattern, count in counts.items():
        if len(pattern) >= 2 and count > f_max:
            f_max = count
    return max(1, f_max // 2)


def rule_confidence(head: Sequence[int], tail: Sequence[int],
                    counts: PatternCounts) -> Fraction:
    """Exact P(tail | head): count(head + tail) / count(head)."""
    head_key = tuple(head)
    head_count = counts.get(head_key, 0)
    if head_count == 0:
        raise ValueError("conditional undefined: head was never observed")
    joint = counts.get(head_key + tuple(tail), 0)
    return Fraction(joint, head_count)


def mine_rules(counts: PatternCounts,
               confidence_cutoff: Fraction | float = DEFAULT_CONFIDENCE_CUTOFF,
               min_support: int = 1,
               max_order: int = DEFAULT_MAX_ORDER,
               max_tail: int = DEFAULT_MAX_TAIL) -> set[MarkovRule]:
    """Every rule passing the support and confidence thresholds.

    A counted pattern of length >= 2 is split at every point into
    head => tail with |head| <= max_order and |tail| <= max_tail; the split
    survives iff count(pattern) >= min_support and
    count(pattern)/count(head) >= confidence_cutoff. Complete by
    construction: no qualifying rule is omitted.
    """
    cutoff = Fraction(confidence_cutoff).limit_denominator(10**9) \
        if isinstance(confidence_cutoff, float) else Fraction(confidence_cutoff)
    if not 0 < cutoff <= 1:
        raise ValueError("confidence cut-off must be in (0, 1]")
    if min_support < 1:
        raise ValueError("min_support must be at least 1")
    rules: set[MarkovRule] = set()
    for pattern, count in counts.items():
        if len(pattern) < 2 or count < min_support:
            continue
        for split in range(1, len(pattern)):
            head, tail = pattern[:split], pattern[split:]
            if len(head) > max_order or len(tail) > max_tail:
                continue
            confidence = Fraction(count, counts[head])
            if confidence >= cutoff:
                rules.add(MarkovRule(head, tail, count, confidence))
    return rules


def mine_sessions(sessions: Sequence[Session],
                  confidence_cutoff: Fraction | float = DEFAULT_CONFIDENCE_CUTOFF,
                  max_order: int = DEFAULT_MAX_ORDER,
                  max_tail: int = DEFAULT_MAX_TAIL,
                  min_support: int | None = None,
                  ) -> tuple[set[MarkovRule], dict[tuple[int, ...], int], int]:
    """Count, derive the dynamic threshold, and mine in one pass.

    min_support=None uses the dynamic threshold; returns (rules, counts, k).
    """
    counts = count_sequences(sessions, max_len=max_order + max_tail)
    k = dynamic_threshold(counts) if min_support is None else min_support
    rules = mine_rules(counts, confidence_cutoff, k, max_order, max_tail)
    return rules, counts, k


# --- canonical serialization ----------------------------------------------

_FORBIDDEN_IN_NAMES = ("|", ",", "\n", "\r")


def rule_to_line(rule: MarkovRule, interner: PageInterner) -> str:
    """One rule in canonical line form: head|tail|support|confidence."""
    names = [interner.name(p) for p in rule.sequence]
    for name in names:
        if any(ch in name for ch in _FORBIDDEN_IN_NAMES):
            raise ValueError(f"page name {name!r} cannot be serialized")
    head = ",".join(names[:len(rule.head)])
    tail = ",".join(names[len(rule.head):])
    conf = rule.confidence
    return f"{head}|{tail}|{rule.support}|{conf.numerator}/{conf.denominator}"


def rule_from_line(line: str, interner: PageInterner) -> MarkovRule:
    parts = line.split("|")
    if len(parts) != 4:
        raise ValueError("expected head|tail|support|confidence")
    head_text, tail_text, support_text, conf_text = parts
    if not head_text or not tail_text:
        raise ValueError("head and tail must be non-empty")
    head = tuple(interner.intern(name) for name in head_text.split(","))
    tail = tuple(interner.intern(name) for name in tail_text.split(","))
    try:
        support = int(support_text)
        num_text, _, den_text = conf_text.partition("/")
        confidence = Fraction(int(num_text), int(den_text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad support/confidence: {exc}") from None
    return MarkovRule(head, tail, support, confidence)


def canonical_lines(rules: Iterable[MarkovRule],
                    interner: PageInterner) -> list[str]:
    """Deterministic rule-set rendering: one line per rule, sorted."""
    return sorted(rule_to_line(rule, interner) for rule in rules)
