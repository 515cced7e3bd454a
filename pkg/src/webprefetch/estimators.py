"""Scikit-learn style wrappers around the learnable core.

The rough-set filter is a transformer over session samples and the rule
miner is a fit/predict estimator, so both compose with sklearn pipelines,
cloning, and parameter search. Samples are Session objects; predictions
operate on recent-page-id windows.
"""

from __future__ import annotations

from fractions import Fraction

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .logs import PageInterner
from .mining import mine_sessions
from .repository import RuleRepository
from .roughset import DwellBuckets, select_quality_sessions
from .sessions import Session, dwell_profile


def _validate_sessions(X, *, allow_empty=False):
    sessions = list(X)
    if not sessions and not allow_empty:
        raise ValueError("X must contain at least one session")
    for sample in sessions:
        if not isinstance(sample, Session):
            raise TypeError(f"expected Session samples, got {type(sample).__name__}")
    return sessions


class RoughSetSessionFilter(TransformerMixin, BaseEstimator):
    """Sample filter keeping sessions certified as high-dwell quality.

    fit() learns which per-page dwell-bucket signatures belong to partition
    blocks fully inside the high-dwell target set; transform() keeps the
    sessions carrying such a signature. When the lower approximation is
    empty, the filter falls back to the raw dwell-threshold rule
    (fallback_ is then True).
    """

    def __init__(self, bucket_thresholds=(0.0, 60.0), target_quantile=0.5,
                 min_page_support=1):
        self.bucket_thresholds = bucket_thresholds
        self.target_quantile = target_quantile
        self.min_page_support = min_page_support

    def fit(self, X, y=None):
        sessions = _validate_sessions(X)
        selection = select_quality_sessions(
            sessions, DwellBuckets(tuple(self.bucket_thresholds)),
            self.target_quantile, self.min_page_support)
        self.selection_ = selection
        self.attributes_ = selection.system.attributes
        self.dwell_threshold_ = selection.dwell_threshold
        self.fallback_ = selection.fallback_used
        quality = set()
        if not selection.fallback_used:
            for sid in selection.selected_ids:
                row = selection.system.rows[selection.system.universe.index(sid)]
                quality.add(row)
        self.quality_signatures_ = frozenset(quality)
        return self

    def _signature(self, session: Session) -> tuple[int, ...]:
        buckets = DwellBuckets(tuple(self.bucket_thresholds))
        _, per_page = dwell_profile(session)
        return tuple(buckets.bucket(per_page[a]) if a in per_page else 0
                     for a in self.attributes_)

    def transform(self, X):
        check_is_fitted(self, "quality_signatures_")
        sessions = _validate_sessions(X, allow_empty=True)
        if self.fallback_:
            return [s for s in sessions
                    if dwell_profile(s)[0] >= self.dwell_threshold_]
        return [s for s in sessions
                if self._signature(s) in self.quality_signatures_]


class MarkovRuleMiner(BaseEstimator):
    """Learn prefetch rules from sessions; predict the next page of a window.

    min_support=None derives the threshold dynamically (half the top
    multi-page sequence count). Pass the interner used to build the
    sessions to make the fitted repository serializable with real page
    names; prediction works either way.
    """

    def __init__(self, confidence_cutoff=0.5, max_order=3, max_tail=2,
                 min_support=None, interner=None):
        self.confidence_cutoff = confidence_cutoff
        self.max_order = max_order
        self.max_tail = max_tail
        self.min_support = min_support
        self.interner = interner

    def fit(self, X, y=None):
        sessions = _validate_sessions(X)
        cutoff = Fraction(self.confidence_cutoff).limit_denominator(10**9) \
            if isinstance(self.confidence_cutoff, float) \
            else Fraction(self.confidence_cutoff)
        rules, counts, k = mine_sessions(
            sessions, confidence_cutoff=cutoff, max_order=self.max_order,
            max_tail=self.max_tail, min_support=self.min_support)
        repo = RuleRepository(self.interner if self.interner is not None
                              else PageInterner())
        repo.insert_all(rules)
        repo.freeze()
        self.rules_ = frozenset(rules)
        self.counts_ = counts
        self.support_threshold_ = k
        self.repository_ = repo
        return self

    def predict(self, X):
        """Most confident next page id for each recent-access window (or None)."""
        check_is_fitted(self, "repository_")
        predictions = []
        for window in X:
            pages = tuple(window)
            candidates = self.repository_.lookup_by_head(pages) if pages else []
            predictions.append(candidates[0].tail[0] if candidates else None)
        return predictions
