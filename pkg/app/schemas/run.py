from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.config import settings
from app.core.enums import EvolutionMode, MatcherKind
from app.core.exceptions import ConfigError


def _log2_ceil(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


def default_warmup(n: int, matcher: MatcherKind) -> int:
    if matcher is MatcherKind.ONE_SIDED:
        return settings.warmup_linear_factor * n * _log2_ceil(n)
    return settings.warmup_quadratic_factor * n * n * _log2_ceil(n)


def default_sample_every(n: int) -> int:
    return max(1, math.ceil(n / settings.sample_every_divisor))


class RunConfig(BaseModel):
    model_config = ConfigDict(use_enum_values=False, extra="forbid")

    n: int = Field(..., ge=1)
    alpha: int = Field(default=1, ge=0)
    matcher: MatcherKind = MatcherKind.INTERLEAVED
    # Defaults to the mode the matcher needs
    mode: Optional[EvolutionMode] = None
    seed: int = Field(default=0, ge=0)
    max_t: Optional[int] = Field(default=None, ge=0)
    sample_every: Optional[int] = Field(default=None, ge=1)
    c_window: float = Field(default=settings.default_c_window, gt=0, allow_inf_nan=False)
    warmup_t: Optional[int] = Field(default=None, ge=0)
    record_events: bool = True

    @model_validator(mode="after")
    def _derive_and_check(self) -> "RunConfig":
        if self.mode is None:
            self.mode = EvolutionMode.ONE_SIDED_B if self.matcher is MatcherKind.ONE_SIDED else EvolutionMode.TWO_SIDED
        if self.matcher is MatcherKind.ONE_SIDED and self.mode is not EvolutionMode.ONE_SIDED_B:
            raise ValueError("the one_sided matcher requires one_sided_b evolution")
        if self.matcher in (MatcherKind.SIMPLE, MatcherKind.INTERLEAVED) and self.mode is not EvolutionMode.TWO_SIDED:
            raise ValueError(f"the {self.matcher.value} matcher requires two_sided evolution")
        if self.sample_every is None:
            self.sample_every = default_sample_every(self.n)
        if self.warmup_t is None:
            self.warmup_t = default_warmup(self.n, self.matcher)
            if self.max_t is not None:
                self.warmup_t = min(self.warmup_t, self.max_t)
        if self.max_t is None:
            self.max_t = self.warmup_t + 4 * max(self.warmup_t, self.n)
        if self.warmup_t > self.max_t:
            raise ValueError(f"warmup_t ({self.warmup_t}) exceeds max_t ({self.max_t})")
        return self

    def run_name(self) -> str:
        return f"{self.matcher.value}_n{self.n}_a{self.alpha}_s{self.seed}"


class RunSummary(BaseModel):
    """Steady-state statistics over post-warmup samples."""

    samples: int
    median: Optional[float] = None
    mean: Optional[float] = None
    p95: Optional[float] = None
    critical_rate: float = 0.0
    audit_violation_rate: float = 0.0
    audited_blocking_pairs: int = 0


class RunManifest(BaseModel):
    config: RunConfig
    code_version: str
    stream_keys: dict[str, int]
    t_final: int
    query_count: int
    idle_steps: int
    events: int
    critical_events: int
    runs_completed: int
    proposals: int
    summary: RunSummary
    files: dict[str, str] = Field(default_factory=dict)


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ns: list[int] = Field(..., min_length=1)
    matchers: list[MatcherKind] = Field(default_factory=lambda: [MatcherKind.INTERLEAVED], min_length=1)
    alpha: int = Field(default=1, ge=0)
    replications: int = Field(default=10, ge=1)
    base_seed: int = Field(default=0, ge=0)
    c_window: float = Field(default=settings.default_c_window, gt=0, allow_inf_nan=False)
    # Multiples of the default warmup / run length; handy for quick sweeps
    warmup_scale: float = Field(default=1.0, gt=0)
    horizon_scale: float = Field(default=1.0, gt=0)
    # joblib n_jobs: -1 for every core, never 0
    parallelism: int = Field(default=settings.sweep_parallelism, ge=-1)
    fit: bool = True

    @model_validator(mode="after")
    def _check_ns(self) -> "SweepRequest":
        if any(n < 1 for n in self.ns):
            raise ValueError("every n must be at least 1")
        if self.parallelism == 0:
            raise ValueError("parallelism must be a positive worker count or -1")
        return self

    def configs(self) -> list[RunConfig]:
        configs = []
        for matcher in self.matchers:
            for n in sorted(set(self.ns)):
                warmup = math.ceil(default_warmup(n, matcher) * self.warmup_scale)
                horizon = math.ceil(4 * max(warmup, n) * self.horizon_scale)
                for r in range(self.replications):
                    configs.append(
                        RunConfig(
                            n=n,
                            alpha=self.alpha,
                            matcher=matcher,
                            seed=self.base_seed + r,
                            c_window=self.c_window,
                            warmup_t=warmup,
                            max_t=warmup + horizon,
                            record_events=False,
                        )
                    )
        return configs

    def total_steps(self) -> int:
        return sum(config.max_t for config in self.configs())


class ReplicationResult(BaseModel):
    n: int
    matcher: MatcherKind
    seed: int
    summary: RunSummary


class GroupSummary(BaseModel):
    matcher: MatcherKind
    n: int
    replications: int
    median: float
    mean: float
    p95: float


class SlopeFit(BaseModel):
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    confidence: float
    points: int


class SweepSummary(BaseModel):
    alpha: int
    groups: list[GroupSummary]
    fits: dict[str, SlopeFit] = Field(default_factory=dict)
    replications: list[ReplicationResult] = Field(default_factory=list)


def _load_yaml(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must hold a mapping at the top level")
    return data


def make_run_config(**fields) -> RunConfig:
    """Validate ``fields`` into a RunConfig, reporting failures as ConfigError."""
    try:
        return RunConfig.model_validate({k: v for k, v in fields.items() if v is not None})
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def load_run_config(path: str | Path, **overrides) -> RunConfig:
    data = _load_yaml(path)
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def load_sweep_request(path: str | Path) -> SweepRequest:
    try:
        return SweepRequest.model_validate(_load_yaml(path))
    except ValidationError as e:
        raise ConfigError(str(e)) from e
