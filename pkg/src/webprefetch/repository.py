"""Indexed store for mined prefetch rules.

Two indexes back the agent's scans: an exact head index for
"what follows this access window", and an inverted page index listing the
rules that contain a page anywhere but their final position (a page with
nothing after it cannot drive a prefetch). The build phase is
single-writer; freeze() makes the repository immutable and safe to share.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

from .logs import PageInterner
from .mining import MarkovRule, canonical_lines, rule_from_line


class RuleFileError(ValueError):
    """A rule file line that cannot be decoded; carries its line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"rule file line {line_no}: {message}")
        self.line_no = line_no


class FrozenRepositoryError(RuntimeError):
    pass


class RuleRepository:
    """Rule set plus head and containment indexes, rebuildable from scratch."""

    def __init__(self, interner: PageInterner | None = None) -> None:
        self.interner = interner if interner is not None else PageInterner()
        self._by_key: dict[tuple[tuple[int, ...], tuple[int, ...]], MarkovRule] = {}
        self._head_index: dict[tuple[int, ...], set[tuple]] = {}
        self._containment_index: dict[int, set[tuple]] = {}
        self._frozen = False

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[MarkovRule]:
        return iter(self._by_key.values())

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "RuleRepository":
        self._frozen = True
        return self

    def insert(self, rule: MarkovRule) -> None:
        """Add a rule; a duplicate (same head and tail) keeps the higher support."""
        if self._frozen:
            raise FrozenRepositoryError("repository is frozen")
        key = (rule.head, rule.tail)
        existing = self._by_key.get(key)
        if existing is not None:
            if existing.support >= rule.support:
                return
            self._unindex(existing)
        self._by_key[key] = rule
        self._head_index.setdefault(rule.head, set()).add(key)
        sequence = rule.sequence
        for page in set(sequence[:-1]):
            self._containment_index.setdefault(page, set()).add(key)

    def _unindex(self, rule: MarkovRule) -> None:
        key = (rule.head, rule.tail)
        self._head_index[rule.head].discard(key)
        for page in set(rule.sequence[:-1]):
            self._containment_index[page].discard(key)

    def insert_all(self, rules: Iterable[MarkovRule]) -> None:
        for rule in rules:
            self.insert(rule)

    def page_name(self, page: int) -> str:
        """Interned name, or a stable placeholder for ids the interner lacks."""
        if 0 <= page < len(self.interner):
            return self.interner.name(page)
        return f"#{page}"

    def _rank(self, rule: MarkovRule) -> tuple:
        # Deterministic preference order: confidence, support, then the
        # lexicographically smallest tail by interned name.
        return (-rule.confidence, -rule.support,
                tuple(self.page_name(p) for p in rule.tail))

    def lookup_by_head(self, pages: Iterable[int]) -> list[MarkovRule]:
        """Rules whose head matches a suffix of the given access window.

        Longest suffix first (a k-order predictor outranks lower orders),
        then descending confidence, support, lexicographic tail.
        """
        window = tuple(pages)
        if not window:
            raise ValueError("lookup window must be non-empty")
        out: list[MarkovRule] = []
        for length in range(len(window), 0, -1):
            suffix = window[-length:]
            keys = self._head_index.get(suffix)
            if keys:
                out.extend(sorted((self._by_key[k] for k in keys), key=self._rank))
        return out

    def scan_containing(self, page: int) -> list[MarkovRule]:
        """Rules whose full sequence holds the page at a non-final position."""
        keys = self._containment_index.get(page, set())
        return sorted((self._by_key[k] for k in keys), key=self._rank)

    def rules(self) -> frozenset[MarkovRule]:
        return frozenset(self._by_key.values())

    def rebuild_indexes(self) -> None:
        """Recompute both indexes from the rule set (consistency check hook)."""
        rules = list(self._by_key.values())
        self._by_key.clear()
        self._head_index.clear()
        self._containment_index.clear()
        frozen, self._frozen = self._frozen, False
        self.insert_all(rules)
        self._frozen = frozen

    def index_snapshot(self) -> tuple[dict, dict]:
        head = {h: frozenset(keys) for h, keys in self._head_index.items() if keys}
        contain = {p: frozenset(keys) for p, keys in self._containment_index.items() if keys}
        return head, contain

    # --- persistence -------------------------------------------------------

    def to_text(self) -> str:
        return "".join(line + "\n" for line in canonical_lines(self, self.interner))

    def save(self, sink) -> None:
        """Write the canonical rule file to a path or text file object."""
        text = self.to_text()
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            Path(sink).write_text(text, encoding="utf-8")

    @classmethod
    def load(cls, source, interner: PageInterner | None = None) -> "RuleRepository":
        """Read a rule file from a path or text file object."""
        if hasattr(source, "read"):
            text = source.read()
        else:
            text = Path(source).read_text(encoding="utf-8")
        repo = cls(interner)
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                repo.insert(rule_from_line(line, repo.interner))
            except ValueError as exc:
                raise RuleFileError(line_no, str(exc)) from None
        return repo
