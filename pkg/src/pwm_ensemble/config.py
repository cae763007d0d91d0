"""Experiment configuration: one YAML file describes a whole seed sweep.

Every field has a default (see the README table) and unknown keys are
rejected, so a config file fully determines the results it produces.
"""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .environment import ConfigurationError

CONFIG_VERSION = 1
AGGREGATORS = ("pwm", "epwm", "wm", "blum", "trackexp", "am", "alone")
# rules that cannot weigh an abstaining learner
NEEDS_FULL_VECTORS = ("pwm", "wm", "blum", "trackexp")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HyperplaneStream(_Strict):
    kind: Literal["s1"]
    relevant_count: int | None = Field(default=None, ge=1)
    walk_std: float = Field(default=0.1, ge=0)


class EventStream(_Strict):
    kind: Literal["s2"]
    event_prob: float = Field(default=0.05, ge=0, le=1)
    noise_std_good: float = Field(default=0.5 ** 0.5, ge=0)
    noise_std_bad: float = Field(default=1.0, ge=0)
    switch_prob: float = Field(default=0.01, ge=0, le=1)
    label_rule: Literal["any", "all"] = "any"
    forced_switch_slots: list[int] = []


class GaussianStream(_Strict):
    kind: Literal["s3"]
    mu: float = Field(default=1.0, ge=0)


class CsvStream(_Strict):
    kind: Literal["csv"]
    path: str
    learners: list[list[str]]
    label: str
    label_values: Literal["01", "pm1"] = "01"


StreamSpec = Union[HyperplaneStream, EventStream, GaussianStream, CsvStream]


class ClassifierSpec(_Strict):
    kind: Literal["logistic", "threshold"] = "logistic"
    learning_rate: float = Field(default=0.1, ge=0)
    gradient_clip: float = Field(default=10.0, gt=0)
    threshold: float = 0.0
    dimension_index: int = Field(default=0, ge=0)


class EnvironmentSpec(_Strict):
    max_delay: int = Field(default=0, ge=0)
    delay_kind: Literal["uniform", "fixed"] = "uniform"
    label_prob: float = Field(default=1.0, gt=0, le=1)
    arrival_prob: float = Field(default=1.0, gt=0, le=1)
    epsilon: float = Field(default=0.05, gt=0, lt=1)


class SeedRange(_Strict):
    count: int = Field(ge=1)
    base: int = Field(default=0, ge=0)


class SweepSpec(_Strict):
    variable: str
    values: list[Any] = Field(min_length=1)


class OutputSpec(_Strict):
    dir: str | None = None
    name: str = "run"
    traces: bool = False


class ExperimentConfig(_Strict):
    version: int = CONFIG_VERSION
    stream: StreamSpec = Field(discriminator="kind")
    k: int = Field(ge=1)
    n: int = Field(ge=1)
    aggregators: list[str] = Field(default_factory=lambda: ["pwm", "am", "alone"], min_length=1)
    aggregated: int | None = Field(default=None, ge=1)
    pwm_no_bias: bool = False
    classifier: ClassifierSpec = ClassifierSpec()
    environment: EnvironmentSpec = EnvironmentSpec()
    seeds: Union[list[int], SeedRange] = Field(default_factory=lambda: SeedRange(count=1))
    sweep: SweepSpec | None = None
    oracle: bool = True
    output: OutputSpec = OutputSpec()

    @field_validator("version")
    @classmethod
    def _version(cls, v: int) -> int:
        if v != CONFIG_VERSION:
            raise ValueError(f"config version {v} is not supported (expected {CONFIG_VERSION})")
        return v

    @field_validator("aggregators")
    @classmethod
    def _known(cls, v: list[str]) -> list[str]:
        bad = [a for a in v if a not in AGGREGATORS]
        if bad:
            raise ValueError(f"unknown aggregator(s) {bad}; choose from {list(AGGREGATORS)}")
        if len(set(v)) != len(v):
            raise ValueError("aggregators must not repeat")
        return v

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v):
        if isinstance(v, list):
            if not v:
                raise ValueError("the seed list is empty")
            if any(s < 0 for s in v):
                raise ValueError("seeds must be >= 0")
        return v

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if self.aggregated is not None and self.aggregated > self.k:
            raise ValueError(f"aggregated={self.aggregated} exceeds k={self.k}")
        if self.environment.arrival_prob < 1:
            bad = [a for a in self.aggregators if a in NEEDS_FULL_VECTORS]
            if bad:
                raise ValueError(
                    f"aggregators {bad} cannot handle abstaining learners (arrival_prob < 1); use epwm"
                )
        if isinstance(self.stream, CsvStream) and len(self.stream.learners) != self.k:
            raise ValueError(f"csv stream lists {len(self.stream.learners)} learners but k={self.k}")
        return self

    def seed_list(self) -> list[int]:
        if isinstance(self.seeds, SeedRange):
            return list(range(self.seeds.base, self.seeds.base + self.seeds.count))
        return list(self.seeds)

    def points(self) -> list[tuple[Any, "ExperimentConfig"]]:
        """(sweep value, concrete config) pairs; a single (None, self) without a sweep."""
        if self.sweep is None:
            return [(None, self)]
        return [(v, with_override(self, self.sweep.variable, v)) for v in self.sweep.values]


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "\n".join(lines)


def parse_config(raw: Any) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("<root>: the config must be a mapping")
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigurationError(_format_errors(exc)) from None
    if cfg.sweep is not None:
        for v in cfg.sweep.values:
            with_override(cfg, cfg.sweep.variable, v)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML: {exc}") from None
    return parse_config(raw)


def with_override(cfg: ExperimentConfig, dotted: str, value: Any) -> ExperimentConfig:
    """Copy of ``cfg`` with the dotted key set to ``value``, re-validated."""
    raw = copy.deepcopy(cfg.model_dump(mode="python"))
    raw.pop("sweep", None)
    node = raw
    keys = dotted.split(".")
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            raise ConfigurationError(f"sweep.variable: {dotted!r} does not name a config key")
        node = node[key]
    if keys[-1] not in node:
        raise ConfigurationError(f"sweep.variable: {dotted!r} does not name a config key")
    node[keys[-1]] = value
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigurationError(f"sweep value {value!r} for {dotted}:\n{_format_errors(exc)}") from None
