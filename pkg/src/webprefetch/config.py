"""Pipeline configuration: one TOML file, overridable by CLI flags.

Every knob of the pipeline lives here so an experiment is reproducible
from its config plus seed. Unknown keys are rejected rather than ignored;
a silently misspelled threshold is worse than a loud one.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .agent import (
    DEFAULT_CACHE_CAPACITY,
    DEFAULT_HINT_CAPACITY,
    DEFAULT_PAGE_BYTES,
    DEFAULT_WINDOW,
    GroupClientConfig,
    validate_groups,
)
from .logs import (
    DEFAULT_IGNORE_SUFFIXES,
    DEFAULT_KEEP_STATUS_CLASSES,
    FORMATS,
)
from .mining import DEFAULT_MAX_ORDER, DEFAULT_MAX_TAIL
from .roughset import DEFAULT_BUCKET_THRESHOLDS, DEFAULT_TARGET_QUANTILE
from .sessions import DEFAULT_EXIT_DWELL_SECONDS, DEFAULT_GAP_SECONDS


class ConfigError(ValueError):
    """Unusable configuration: unknown key, bad type, out-of-range value."""


@dataclass(frozen=True)
class PipelineConfig:
    log: str | None = None
    rules: str | None = None
    report: str | None = None
    log_format: str = "common"
    ignore_suffixes: tuple[str, ...] = tuple(sorted(DEFAULT_IGNORE_SUFFIXES))
    keep_status_classes: tuple[int, ...] = tuple(sorted(DEFAULT_KEEP_STATUS_CLASSES))
    keep_all_methods: bool = False
    session_gap_seconds: float = DEFAULT_GAP_SECONDS
    exit_dwell_seconds: float = DEFAULT_EXIT_DWELL_SECONDS
    bucket_thresholds: tuple[float, ...] = DEFAULT_BUCKET_THRESHOLDS
    target_quantile: float = DEFAULT_TARGET_QUANTILE
    min_page_support: int = 1
    confidence_cutoff: float = 0.5
    max_order: int = DEFAULT_MAX_ORDER
    max_tail: int = DEFAULT_MAX_TAIL
    min_support: int = 0  # 0 selects the dynamic threshold
    cache_capacity: int = DEFAULT_CACHE_CAPACITY
    hint_capacity: int = DEFAULT_HINT_CAPACITY
    window: int = DEFAULT_WINDOW
    default_page_bytes: int = DEFAULT_PAGE_BYTES
    seed: int = 0
    groups: tuple[GroupClientConfig, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.log_format not in FORMATS:
            raise ConfigError(f"unknown log_format {self.log_format!r}; "
                              f"choose from {sorted(FORMATS)}")
        if not self.ignore_suffixes:
            raise ConfigError("ignore_suffixes must be non-empty")
        if self.session_gap_seconds <= 0:
            raise ConfigError("session_gap_seconds must be positive")
        if self.exit_dwell_seconds < 0:
            raise ConfigError("exit_dwell_seconds cannot be negative")
        if len(self.bucket_thresholds) < 2 or any(
                b <= a for a, b in zip(self.bucket_thresholds,
                                       self.bucket_thresholds[1:])):
            raise ConfigError("bucket_thresholds must be >= 2 strictly "
                              "increasing values")
        if not 0.0 <= self.target_quantile <= 1.0:
            raise ConfigError("target_quantile must be in [0, 1]")
        if not 0.0 < self.confidence_cutoff <= 1.0:
            raise ConfigError("confidence_cutoff must be in (0, 1]")
        if self.min_page_support < 1:
            raise ConfigError("min_page_support must be at least 1")
        if self.max_order < 1 or self.max_tail < 1:
            raise ConfigError("max_order and max_tail must be at least 1")
        if self.min_support < 0:
            raise ConfigError("min_support cannot be negative (0 = dynamic)")
        if self.cache_capacity < 1 or self.hint_capacity < 1:
            raise ConfigError("capacities must be at least 1")
        if self.window < self.max_order:
            raise ConfigError("window must cover max_order recent requests")
        if self.default_page_bytes < 0:
            raise ConfigError("default_page_bytes cannot be negative")
        if self.seed < 0:
            raise ConfigError("seed cannot be negative")
        try:
            validate_groups(self.groups)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """Apply CLI flags (None values mean: keep the config file's value)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes) if changes else self


_SCALARS = {f.name for f in fields(PipelineConfig)} - {"groups"}
_TUPLE_KEYS = {"ignore_suffixes", "keep_status_classes", "bucket_thresholds"}


def _parse_group(index: int, table) -> GroupClientConfig:
    if not isinstance(table, dict):
        raise ConfigError(f"group #{index}: expected a table")
    known = {"id", "cidrs", "hint_capacity", "window"}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"group #{index}: unknown keys {sorted(unknown)}")
    if "id" not in table or "cidrs" not in table:
        raise ConfigError(f"group #{index}: 'id' and 'cidrs' are required")
    try:
        return GroupClientConfig(group_id=str(table["id"]),
                                 cidrs=tuple(table["cidrs"]),
                                 hint_capacity=table.get("hint_capacity"),
                                 window=table.get("window"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str) -> PipelineConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None
    unknown = set(data) - _SCALARS - {"group"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key == "group":
            if not isinstance(value, list):
                raise ConfigError("group must be an array of tables ([[group]])")
            kwargs["groups"] = tuple(_parse_group(i, t)
                                     for i, t in enumerate(value, start=1))
        elif key in _TUPLE_KEYS:
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    target = Path(path)
    if not target.exists():
        raise ConfigError(f"config file not found: {target}")
    return parse_config(target.read_text(encoding="utf-8"))
