"""Command-line pipeline: gen / ingest / mine / simulate / report.

Every subcommand is deterministic given its inputs, config, and seed, and
writes only to explicitly named paths. Exit codes: 0 ok, 1 input error,
2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import logs
from .config import ConfigError, PipelineConfig, load_config
from .agent import GroupClientConfig
from .metrics import ReplayConfig, SimReport, replay
from .mining import mine_sessions
from .repository import RuleFileError, RuleRepository
from .roughset import DwellBuckets, select_quality_sessions
from .sessions import dump_sessions, load_sessions, sessionize
from .synth import TraceSpec, trace_lines

CATCH_ALL_GROUPS = (GroupClientConfig("all", ("0.0.0.0/0", "::/0")),)


class InputError(Exception):
    """Missing or malformed input data (exit code 1)."""


def _read_lines(path: str) -> list[str]:
    target = Path(path)
    if not target.exists():
        raise InputError(f"input file not found: {target}")
    with open(target, encoding="utf-8", errors="replace") as handle:
        return handle.read().splitlines()


def _parse_and_clean(path: str, cfg: PipelineConfig):
    records, diagnostics = logs.parse_log(_read_lines(path),
                                          logs.FORMATS[cfg.log_format])
    for diag in diagnostics:
        print(f"warning: line {diag.line_no}: {diag.reason}", file=sys.stderr)
    cleaned = logs.clean(
        records,
        ignore_suffixes=frozenset(cfg.ignore_suffixes),
        keep_status_classes=frozenset(cfg.keep_status_classes),
        keep_methods=None if cfg.keep_all_methods else logs.DEFAULT_KEEP_METHODS)
    return cleaned, len(records), len(diagnostics)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _config_from_args(args) -> PipelineConfig:
    cfg = load_config(args.config)
    overrides = {}
    for name in ("log_format", "session_gap_seconds", "target_quantile",
                 "confidence_cutoff", "max_order", "max_tail", "min_support",
                 "cache_capacity", "hint_capacity", "window", "seed"):
        if hasattr(args, name):
            overrides[name] = getattr(args, name)
    if getattr(args, "ignore_suffixes", None):
        overrides["ignore_suffixes"] = tuple(
            s if s.startswith(".") else "." + s
            for s in args.ignore_suffixes.split(","))
    if getattr(args, "keep_status", None):
        try:
            overrides["keep_status_classes"] = tuple(
                int(c) for c in args.keep_status.split(","))
        except ValueError:
            raise ConfigError("--keep-status expects comma-separated digits")
    return cfg.with_overrides(**overrides)


def _groups(cfg: PipelineConfig) -> tuple[GroupClientConfig, ...]:
    return cfg.groups if cfg.groups else CATCH_ALL_GROUPS


# --- subcommands -------------------------------------------------------------

def cmd_ingest(args) -> int:
    cfg = _config_from_args(args)
    cleaned, parsed, bad = _parse_and_clean(args.log, cfg)
    interner = logs.PageInterner()
    sessions = sessionize(cleaned, interner, cfg.session_gap_seconds,
                          cfg.exit_dwell_seconds)
    _write(args.out, dump_sessions(sessions, interner))
    print(f"parsed {parsed} records ({bad} bad lines), kept {len(cleaned)}, "
          f"{len(sessions)} sessions", file=sys.stderr)
    return 0


def _sessions_for_mining(args, cfg: PipelineConfig, interner):
    if args.sessions:
        path = Path(args.sessions)
        if not path.exists():
            raise InputError(f"input file not found: {path}")
        try:
            return load_sessions(path.read_text(encoding="utf-8"), interner)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if not args.log:
        raise InputError("mine needs --log or --sessions")
    cleaned, _, _ = _parse_and_clean(args.log, cfg)
    return sessionize(cleaned, interner, cfg.session_gap_seconds,
                      cfg.exit_dwell_seconds)


def cmd_mine(args) -> int:
    cfg = _config_from_args(args)
    repo = RuleRepository()
    sessions = _sessions_for_mining(args, cfg, repo.interner)
    if not sessions:
        raise InputError("no sessions to mine")
    selection = select_quality_sessions(
        sessions, DwellBuckets(cfg.bucket_thresholds),
        cfg.target_quantile, cfg.min_page_support)
    if selection.fallback_used:
        print("warning: empty lower approximation; falling back to the raw "
              "target set", file=sys.stderr)
        if args.strict:
            return 1
    rules, _, k = mine_sessions(
        selection.sessions,
        confidence_cutoff=Fraction(cfg.confidence_cutoff).limit_denominator(10**9),
        max_order=cfg.max_order, max_tail=cfg.max_tail,
        min_support=cfg.min_support or None)
    repo.insert_all(rules)
    repo.save(args.out)
    print(f"{len(sessions)} sessions, {len(selection.sessions)} quality, "
          f"support threshold {k}, {len(repo)} rules -> {args.out}",
          file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    if not Path(args.rules).exists():
        raise InputError(f"rules file not found: {args.rules}")
    try:
        repo = RuleRepository.load(args.rules)
    except RuleFileError as exc:
        raise InputError(str(exc)) from None
    cleaned, _, _ = _parse_and_clean(args.trace, cfg)
    report = replay(cleaned, repo, _groups(cfg),
                    ReplayConfig(cache_capacity=cfg.cache_capacity,
                                 hint_capacity=cfg.hint_capacity,
                                 window=cfg.window,
                                 session_gap_seconds=cfg.session_gap_seconds,
                                 default_page_bytes=cfg.default_page_bytes),
                    prefetch_enabled=args.prefetch == "on")
    _write(args.out, report.to_json())
    if args.csv:
        _write(args.csv, report.to_csv())
    return 0


def _load_report(path: str) -> SimReport:
    if not Path(path).exists():
        raise InputError(f"report file not found: {path}")
    try:
        return SimReport.from_json(Path(path).read_text(encoding="utf-8"))
    except (ValueError, KeyError) as exc:
        raise InputError(f"bad report file {path}: {exc}") from None


def cmd_report(args) -> int:
    baseline = _load_report(args.baseline)
    prefetch = _load_report(args.prefetch)
    rows = [("requests", baseline.requests, prefetch.requests),
            ("hits", baseline.hits, prefetch.hits),
            ("hit_rate", f"{float(baseline.hit_rate):.4f}",
             f"{float(prefetch.hit_rate):.4f}"),
            ("prefetch_issued", baseline.prefetch_issued, prefetch.prefetch_issued),
            ("prefetch_used", baseline.prefetch_used, prefetch.prefetch_used),
            ("precision", f"{float(baseline.precision):.4f}",
             f"{float(prefetch.precision):.4f}"),
            ("bytes_prefetched", baseline.bytes_prefetched, prefetch.bytes_prefetched),
            ("bytes_wasted", baseline.bytes_wasted, prefetch.bytes_wasted),
            ("crawl_requests", baseline.crawl_requests, prefetch.crawl_requests)]
    width = max(len(r[0]) for r in rows)
    print(f"{'metric':<{width}}  {'baseline':>12}  {'prefetch':>12}")
    for name, base, pref in rows:
        print(f"{name:<{width}}  {base!s:>12}  {pref!s:>12}")
    delta = float(prefetch.hit_rate - baseline.hit_rate)
    print(f"{'hit_rate_delta':<{width}}  {'':>12}  {delta:>+12.4f}")
    return 0


def cmd_gen(args) -> int:
    try:
        spec = TraceSpec(seed=args.seed, total_requests=args.requests,
                         clients=args.clients, pattern_count=args.patterns,
                         pattern_length=args.pattern_length,
                         noise_pages=args.noise_pages,
                         follow_probability=args.follow_prob,
                         session_break_probability=args.break_prob,
                         network=args.network)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write(args.out, "".join(line + "\n" for line in trace_lines(spec)))
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="webprefetch",
        description="Mine web access logs into Markov prefetch rules and "
                    "replay traces against them.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="TOML config file")

    p_ingest = sub.add_parser("ingest", help="parse, clean, and sessionize a log")
    add_common(p_ingest)
    p_ingest.add_argument("--log", required=True, help="access log path")
    p_ingest.add_argument("--out", help="session dump path (default: stdout)")
    p_ingest.add_argument("--log-format", dest="log_format",
                          choices=sorted(logs.FORMATS))
    p_ingest.add_argument("--ignore-suffixes", dest="ignore_suffixes",
                          help="comma-separated suffixes to drop")
    p_ingest.add_argument("--keep-status", dest="keep_status",
                          help="comma-separated status classes to keep, e.g. 2,3")
    p_ingest.add_argument("--session-gap", dest="session_gap_seconds", type=float)
    p_ingest.set_defaults(func=cmd_ingest)

    p_mine = sub.add_parser("mine", help="mine prefetch rules from a log")
    add_common(p_mine)
    p_mine.add_argument("--log", help="access log path")
    p_mine.add_argument("--sessions", help="session dump path (alternative input)")
    p_mine.add_argument("--out", required=True, help="rule file path")
    p_mine.add_argument("--t-c", dest="confidence_cutoff", type=float,
                        help="confidence cut-off in (0, 1]")
    p_mine.add_argument("--max-order", dest="max_order", type=int)
    p_mine.add_argument("--max-tail", dest="max_tail", type=int)
    p_mine.add_argument("--min-support", dest="min_support", type=int,
                        help="fixed support threshold (0 = dynamic)")
    p_mine.add_argument("--quantile", dest="target_quantile", type=float)
    p_mine.add_argument("--strict", action="store_true",
                        help="fail when the lower approximation is empty")
    p_mine.set_defaults(func=cmd_mine)

    p_sim = sub.add_parser("simulate", help="replay a trace against a rule file")
    add_common(p_sim)
    p_sim.add_argument("--trace", required=True, help="access log path")
    p_sim.add_argument("--rules", required=True, help="rule file path")
    p_sim.add_argument("--prefetch", choices=("on", "off"), default="on")
    p_sim.add_argument("--out", required=True, help="report JSON path")
    p_sim.add_argument("--csv", help="also write metric,value CSV here")
    p_sim.add_argument("--cache-capacity", dest="cache_capacity", type=int)
    p_sim.add_argument("--hint-capacity", dest="hint_capacity", type=int)
    p_sim.add_argument("--window", dest="window", type=int)
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("report", help="compare baseline and prefetch reports")
    p_rep.add_argument("--baseline", required=True)
    p_rep.add_argument("--prefetch", required=True)
    p_rep.set_defaults(func=cmd_report)

    p_gen = sub.add_parser("gen", help="generate a synthetic trace with "
                                       "planted patterns")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--requests", type=int, default=5000)
    p_gen.add_argument("--clients", type=int, default=250)
    p_gen.add_argument("--patterns", type=int, default=4)
    p_gen.add_argument("--pattern-length", dest="pattern_length", type=int, default=4)
    p_gen.add_argument("--noise-pages", dest="noise_pages", type=int, default=8)
    p_gen.add_argument("--follow-prob", dest="follow_prob", type=float, default=0.8)
    p_gen.add_argument("--break-prob", dest="break_prob", type=float, default=0.02)
    p_gen.add_argument("--network", default="10.0")
    p_gen.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
