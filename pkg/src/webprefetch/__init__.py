"""Trace-driven predictive web prefetching.

Mines per-group-client access logs into k-order Markov prefetch rules via
rough-set session filtering, then replays request traces through a
group-client agent and simulated cache to measure the benefit.
"""

from .agent import (
    AgentState,
    GroupClientConfig,
    HintList,
    LruCache,
    ip_match,
    on_request,
    page_load,
    resolve_conflict,
    validate_groups,
)
from .config import ConfigError, PipelineConfig, load_config, parse_config
from .estimators import MarkovRuleMiner, RoughSetSessionFilter
from .logs import LogRecord, PageInterner, clean, parse_log, render_record
from .metrics import (
    RelevanceListing,
    ReplayConfig,
    SimReport,
    replay,
    reposition,
    search_area,
    search_area_ratio,
)
from .mining import (
    MarkovRule,
    canonical_lines,
    count_sequences,
    dynamic_threshold,
    mine_rules,
    mine_sessions,
    rule_confidence,
)
from .repository import RuleFileError, RuleRepository
from .roughset import (
    Approximations,
    DwellBuckets,
    InformationSystem,
    Partition,
    build_information_system,
    indiscernibility_partition,
    lower_approximation,
    select_quality_sessions,
    upper_approximation,
)
from .sessions import Session, Visit, dwell_profile, sessionize
from .synth import TraceSpec, generate_trace, trace_lines

__version__ = "0.1.0"

__all__ = [
    "AgentState", "Approximations", "ConfigError", "DwellBuckets",
    "GroupClientConfig", "HintList", "InformationSystem", "LogRecord",
    "LruCache", "MarkovRule", "MarkovRuleMiner", "PageInterner",
    "Partition", "PipelineConfig", "RelevanceListing", "ReplayConfig",
    "RoughSetSessionFilter", "RuleFileError", "RuleRepository", "Session",
    "SimReport", "TraceSpec", "Visit", "build_information_system",
    "canonical_lines", "clean", "count_sequences", "dwell_profile",
    "dynamic_threshold", "generate_trace", "indiscernibility_partition",
    "ip_match", "load_config", "lower_approximation", "mine_rules",
    "mine_sessions", "on_request", "page_load", "parse_config", "parse_log",
    "render_record", "replay", "reposition", "resolve_conflict",
    "rule_confidence", "search_area", "search_area_ratio",
    "select_quality_sessions", "sessionize", "trace_lines",
    "upper_approximation", "validate_groups",
]
