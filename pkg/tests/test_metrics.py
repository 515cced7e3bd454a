import math
import random
from datetime import datetime, timedelta, timezone
from fractions import Fraction

import pytest

from webprefetch.agent import GroupClientConfig
from webprefetch.logs import LogRecord
from webprefetch.metrics import (
    RelevanceListing,
    ReplayConfig,
    SimReport,
    replay,
    reposition,
    search_area,
    search_area_ratio,
)
from webprefetch.mining import MarkovRule
from webprefetch.repository import RuleRepository

T0 = datetime(2010, 3, 12, 10, 0, 0, tzinfo=timezone.utc)


def rec(ip, offset_seconds, resource, size=100):
    return LogRecord(client_ip=ip, timestamp=T0 + timedelta(seconds=offset_seconds),
                     method="GET", resource=resource, status=200, bytes=size,
                     protocol="HTTP/1.0")


def table2_repo():
    repo = RuleRepository()
    it = repo.interner
    specs = [(["/u3"], ["/u37"]), (["/u2"], ["/u12", "/u18"]),
             (["/u1"], ["/u23", "/u33"]), (["/u17"], ["/u21"])]
    for head, tail in specs:
        repo.insert(MarkovRule(tuple(it.intern(n) for n in head),
                               tuple(it.intern(n) for n in tail),
                               3, Fraction(1)))
    return repo


GROUPS = (GroupClientConfig("lab", ("10.0.0.0/8",)),)


# --- search area -------------------------------------------------------------

def test_search_area_worked_values():
    assert search_area(37, 10) == 148
    assert search_area(4, 10) == 4
    assert search_area(1, 10) == 1


def test_search_area_rejects_nonpositive():
    with pytest.raises(ValueError):
        search_area(0, 10)
    with pytest.raises(ValueError):
        search_area(5, 0)


def test_search_area_strictly_increasing_in_position():
    values = [search_area(p, 10) for p in range(1, 120)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_search_area_ratio_exact():
    assert search_area_ratio(4, 148) == Fraction(1, 37)
    assert search_area_ratio(148, 148) == 1


def test_search_area_ratio_matches_gcd_reduction():
    rng = random.Random(31)
    for _ in range(200):
        a, b = rng.randrange(0, 500), rng.randrange(1, 500)
        ratio = search_area_ratio(a, b)
        g = math.gcd(a, b)
        assert (ratio.numerator, ratio.denominator) == (a // g, b // g)


def test_search_area_ratio_rejects_zero_area():
    with pytest.raises(ValueError):
        search_area_ratio(4, 0)


# --- repositioning ------------------------------------------------------------

def listing50(repo):
    it = repo.interner
    return RelevanceListing.ranked([it.intern(f"/u{i}") for i in range(1, 51)])


def test_reposition_moves_successor_behind_accessed():
    repo = table2_repo().freeze()
    it = repo.interner
    listing = listing50(repo)
    assert listing.position_of(it.intern("/u37")) == 37
    moved = reposition(listing, repo, it.intern("/u3"))
    assert moved.position_of(it.intern("/u37")) == 4
    assert moved.page_number_of(it.intern("/u37")) == 1
    # relevancy factor now reflects the promoted position
    assert moved.entries[3] == (it.intern("/u37"), 47)


def test_reposition_without_matching_rules_is_identity():
    repo = table2_repo().freeze()
    it = repo.interner
    listing = listing50(repo)
    assert reposition(listing, repo, it.intern("/u40")) == listing


def test_reposition_unknown_page_errors():
    repo = table2_repo().freeze()
    listing = listing50(repo)
    with pytest.raises(ValueError):
        reposition(listing, repo, repo.interner.intern("/not-listed"))


def test_reposition_is_permutation_with_contiguous_promotion():
    rng = random.Random(37)
    for _ in range(25):
        repo = RuleRepository()
        it = repo.interner
        ids = [it.intern(f"/p{i}") for i in range(20)]
        for _ in range(rng.randrange(1, 8)):
            head = (rng.choice(ids),)
            tail = tuple(rng.choice(ids) for _ in range(rng.randrange(1, 3)))
            den = rng.randrange(1, 6)
            repo.insert(MarkovRule(head, tail, rng.randrange(1, 9),
                                   Fraction(rng.randrange(1, den + 1), den)))
        repo.freeze()
        listing = RelevanceListing.ranked(rng.sample(ids, len(ids)), page_size=5)
        accessed = rng.choice(ids)
        moved = reposition(listing, repo, accessed)
        assert sorted(moved.pages) == sorted(listing.pages)
        assert len(moved.entries) == len(listing.entries)
        # promoted block sits right after the accessed page
        pos = listing.position_of(accessed)
        assert moved.pages[:pos] == listing.pages[:pos]


def test_ranked_listing_validates_factors():
    with pytest.raises(ValueError):
        RelevanceListing(((1, 5), (2, 3)), 10)
    listing = RelevanceListing.ranked([7, 8, 9])
    assert [f for _, f in listing.entries] == [3, 2, 1]


# --- replay --------------------------------------------------------------------

def test_replay_empty_trace_is_all_zero():
    report = replay([], table2_repo(), GROUPS)
    assert report == SimReport(prefetch_enabled=True)
    assert report.hit_rate == 0
    assert report.precision == 0


def test_replay_disabled_prefetch_has_zero_prefetch_counters():
    trace = [rec("10.0.0.1", i * 10, r) for i, r in
             enumerate(["/u3", "/u37", "/u3", "/u37"])]
    report = replay(trace, table2_repo(), GROUPS, prefetch_enabled=False)
    assert report.prefetch_issued == 0
    assert report.prefetch_used == 0
    assert report.bytes_prefetched == 0
    assert report.requests == 4
    assert report.hits == 2  # plain LRU: repeats hit


def test_replay_table2_prefetched_hit():
    trace = [rec("10.0.0.1", 0, "/u3", size=300),
             rec("10.0.0.1", 10, "/u37", size=700)]
    events = []
    report = replay(trace, table2_repo(), GROUPS, observer=events.append)
    assert report.requests == 2
    assert report.hits == 1
    assert report.prefetch_issued == 1
    assert report.prefetch_used == 1
    assert report.precision == 1
    assert report.bytes_wasted == 0
    assert events[1].cache_hit and events[1].hit_was_prefetched


def test_replay_beats_baseline_on_repeating_pattern():
    # Fresh clients repeatedly walking a mined pattern: baseline misses the
    # first visit of every page, prefetching turns the successors into hits.
    repo = RuleRepository()
    it = repo.interner
    a, b, c = it.intern("/a"), it.intern("/b"), it.intern("/c")
    repo.insert(MarkovRule((a,), (b, c), 10, Fraction(9, 10)))
    trace = []
    for i in range(10):
        ip = f"10.0.1.{i}"
        for j, r in enumerate(["/a", "/b", "/c"]):
            trace.append(rec(ip, i * 1000 + j * 10, r))
    base = replay(trace, repo, GROUPS, prefetch_enabled=False)
    pref = replay(trace, repo, GROUPS, prefetch_enabled=True)
    assert base.requests == pref.requests == 30
    assert base.hits == 0
    assert pref.hits == 20  # /b and /c prefetched for each client
    assert pref.prefetch_issued == 20
    assert pref.precision == 1


def test_replay_counts_crawl_fallbacks():
    trace = [rec("10.0.0.1", 0, "/unknown1"), rec("10.0.0.1", 10, "/unknown2")]
    report = replay(trace, table2_repo(), GROUPS)
    assert report.crawl_requests == 2


def test_replay_ungrouped_clients_never_prefetch():
    trace = [rec("192.168.0.1", i * 10, r) for i, r in
             enumerate(["/u3", "/u37", "/u3"])]
    report = replay(trace, table2_repo(), GROUPS)
    assert report.prefetch_issued == 0
    assert report.requests == 3
    assert report.hits == 1


def test_replay_agent_resets_at_session_boundary():
    events = []
    trace = [rec("10.0.0.1", 0, "/u3"),
             rec("10.0.0.1", 4000, "/u37")]  # beyond the 30-minute gap
    replay(trace, table2_repo(), GROUPS, observer=events.append)
    # after the reset /u37 no longer continues the /u3 sequence (the cache
    # itself persists, so the earlier prefetch still serves the hit)
    assert not events[1].continued
    assert events[1].crawl_requested
    assert events[1].cache_hit


def test_replay_wasted_bytes_accounting():
    trace = [rec("10.0.0.1", 0, "/u2", size=50)]  # prefetches /u12 and /u18
    report = replay(trace, table2_repo(), GROUPS,
                    config=ReplayConfig(default_page_bytes=111))
    assert report.prefetch_issued == 2
    assert report.bytes_prefetched == 222
    assert report.bytes_wasted == 222  # never used


def test_replay_is_deterministic_bytes():
    rng = random.Random(41)
    resources = ["/u3", "/u37", "/u2", "/u12", "/u18", "/x", "/y"]
    trace = [rec(f"10.0.0.{rng.randrange(4)}", i * 7, rng.choice(resources),
                 size=rng.randrange(10, 999))
             for i in range(300)]
    first = replay(trace, table2_repo(), GROUPS)
    second = replay(trace, table2_repo(), GROUPS)
    assert first.to_json() == second.to_json()


def test_report_json_round_trip_and_csv():
    report = SimReport(requests=10, hits=4, prefetch_issued=5, prefetch_used=2,
                       bytes_prefetched=900, bytes_wasted=300, crawl_requests=1)
    parsed = SimReport.from_json(report.to_json())
    assert parsed == report
    csv = report.to_csv()
    assert csv.splitlines()[0] == "metric,value"
    assert "hit_rate,2/5" in csv
    assert "precision,2/5" in csv


def test_report_invariant_validation():
    with pytest.raises(ValueError):
        SimReport(requests=1, hits=2)
    with pytest.raises(ValueError):
        SimReport(prefetch_issued=1, prefetch_used=2)
