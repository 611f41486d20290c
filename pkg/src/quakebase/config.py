"""Run configuration: one JSON document for every CLI command."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .baseline import DecisionRule
from .etas import EtasParams
from .experiments import GridSpec

FORMAT_VERSION = "1"


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class EtasConfig(_Strict):
    mu: float = Field(1.0, ge=0)
    k0: float = Field(0.08, ge=0)
    alpha: float = 2.04
    c: float = Field(0.011, gt=0)
    p: float = Field(1.08, gt=1)
    mc: float = 3.0
    b: float = Field(1.0, gt=0)
    m_max: Optional[float] = 8.0
    k0_convention: Literal["rate", "branching"] = "branching"

    def to_params(self) -> EtasParams:
        return EtasParams(**self.model_dump())


class GridConfig(_Strict):
    n_values: list[int] = [1, 4, 9]
    m_th_values: list[float] = [4.0, 5.0, 6.0, 7.0]
    sims: int = Field(10_000, ge=1)
    delta_days: float = Field(100.0, gt=0)
    a_range: tuple[float, float] = (4.0, 6.0)
    fixed_b: Optional[float] = Field(None, gt=0)
    min_events: int = Field(2, ge=1)
    fallback: Literal[0, 1] = 0
    max_events: int = Field(1_000_000, ge=1)

    @field_validator("n_values")
    @classmethod
    def _n_positive(cls, v):
        if not v or any(n < 1 for n in v):
            raise ValueError("every n must be an integer >= 1")
        return v

    @field_validator("a_range")
    @classmethod
    def _a_ordered(cls, v):
        if v[1] < v[0]:
            raise ValueError("a_range must be (low, high)")
        return v


class SimulateConfig(_Strict):
    horizon_days: float = Field(1000.0, gt=0)
    a_value: Optional[float] = 5.0
    window_days: float = Field(100.0, gt=0)
    max_events: int = Field(1_000_000, ge=1)


class SmallSampleConfig(_Strict):
    m_th_values: list[float] = [6.0, 7.0]
    reps: int = Field(100, ge=1)
    batch: int = Field(10, ge=1)
    n: int = Field(4, ge=1)


class RunConfig(_Strict):
    format_version: str = FORMAT_VERSION
    seed: int = Field(0, ge=0)
    output_dir: str = "out"
    etas: EtasConfig = EtasConfig()
    grid: GridConfig = GridConfig()
    rules: list[str] = ["poisson-half", "rate>=0.5", "rate>=1"]
    simulate: SimulateConfig = SimulateConfig()
    small_sample: SmallSampleConfig = SmallSampleConfig()

    @field_validator("rules")
    @classmethod
    def _rules_parse(cls, v):
        if not v:
            raise ValueError("at least one decision rule is required")
        for text in v:
            DecisionRule.parse(text)
        return v

    @model_validator(mode="after")
    def _version(self):
        if self.format_version != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {self.format_version!r}")
        return self

    def decision_rules(self) -> tuple[DecisionRule, ...]:
        return tuple(DecisionRule.parse(r) for r in self.rules)

    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(
            n_values=tuple(g.n_values),
            m_th_values=tuple(float(m) for m in g.m_th_values),
            sims=g.sims,
            delta_days=g.delta_days,
            a_range=tuple(g.a_range),
            rules=self.decision_rules(),
            seed=self.seed,
            fixed_b=g.fixed_b,
            min_events=g.min_events,
            fallback=g.fallback,
            max_events=g.max_events,
        )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """Hash of everything that affects results (the output location does not)."""
        payload = self.model_dump(mode="json", exclude={"output_dir"})
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"tool_version": __version__, "config_hash": self.config_hash(), "seed": self.seed}


def _format_errors(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "invalid config: " + "; ".join(parts)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Load JSON config (defaults when ``path`` is None) and apply dotted overrides."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid config: {path} is not valid JSON ({err})") from None
        if not isinstance(data, dict):
            raise ConfigError("invalid config: top level must be an object")
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return parse_config(data)
