"""Gutenberg-Richter baseline classifier for "mainshock >= m_th in the next window".

A GR law is fitted on the training window ``[t0 - n*delta, t0)``; its rate is
scaled down by ``1/n`` to an expected count over ``[t0, t0 + delta]``, which a
decision rule turns into a 0/1 prediction.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .etas import EtasParams, SimConfig, simulate_catalog
from .seismicity import Catalog, GrParams, InsufficientDataError, fit_gr, gr_rate

_THRESHOLD_RE = re.compile(
    r"^(?:rate>=|rate-ge-threshold\()\s*([0-9.eE+-]+)\s*\)?$"
)


@dataclass(frozen=True)
class DecisionRule:
    """Maps an expected count to a binary prediction.

    kinds: ``poisson-half`` (1 iff P(at least one event) >= 0.5, i.e.
    rate >= ln 2), ``threshold`` (1 iff rate >= theta) and ``always``.
    """

    kind: str = "poisson-half"
    theta: float = math.log(2.0)

    @classmethod
    def parse(cls, text: str) -> "DecisionRule":
        text = text.strip()
        if text == "poisson-half":
            return cls()
        if text == "always":
            return cls("always", 0.0)
        match = _THRESHOLD_RE.match(text)
        if match is None:
            raise ValueError(f"unknown decision rule {text!r}")
        theta = float(match.group(1))
        if theta < 0:
            raise ValueError("decision threshold must be non-negative")
        return cls("threshold", theta)

    @property
    def name(self) -> str:
        if self.kind == "threshold":
            return f"rate>={self.theta:g}"
        return self.kind

    def __str__(self) -> str:
        return self.name


DEFAULT_RULES = (
    DecisionRule(),
    DecisionRule("threshold", 0.5),
    DecisionRule("threshold", 1.0),
)


@dataclass(frozen=True)
class TrialSpec:
    delta_days: float = 100.0
    n: int = 1
    m_th: float = 5.0
    t0: float | None = None

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        if not self.delta_days > 0:
            raise ValueError("delta_days must be positive")

    @property
    def split(self) -> float:
        return self.n * self.delta_days if self.t0 is None else self.t0

    @property
    def horizon(self) -> tuple[float, float]:
        t0 = self.split
        return (t0 - self.n * self.delta_days, t0 + self.delta_days)


@dataclass(frozen=True)
class TrialResult:
    predicted_rate: float
    predicted_label: int
    true_label: int
    fit_failed: bool = False
    truncated: bool = False
    a_value: float | None = None

    def label_for(self, rule: DecisionRule, fallback: int = 0) -> int:
        """Prediction this trial would give under another rule."""
        if self.fit_failed:
            return fallback
        return binarize(self.predicted_rate, rule)


def predicted_rate(gr_trained: GrParams, n: int, m_th: float) -> float:
    """Expected count >= m_th over one prediction window.

    ``gr_trained`` must be normalized to the training-window length n*delta.
    """
    return float(gr_rate(gr_trained, m_th)) / n


def binarize(rate: float, rule: DecisionRule = DecisionRule()) -> int:
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if rule.kind == "always":
        return 1
    if rule.kind == "poisson-half":
        # 1 - exp(-rate) >= 1/2, solved exactly to keep the boundary inclusive
        return int(rate >= math.log(2.0))
    return int(rate >= rule.theta)


def true_label(catalog: Catalog, window: tuple[float, float], m_th: float) -> int:
    t0, t1 = window
    mask = catalog.window_mask(t0, t1, closed_right=True)
    return int(np.any(catalog.m[mask] >= m_th))


def evaluate_catalog(
    catalog: Catalog,
    spec: TrialSpec,
    rule: DecisionRule = DecisionRule(),
    fallback: int = 0,
    min_events: int = 2,
    fixed_b: float | None = None,
) -> TrialResult:
    """Train on ``[t0 - n*delta, t0)`` and score ``[t0, t0 + delta]``."""
    t0 = spec.split
    train = (t0 - spec.n * spec.delta_days, t0)
    label = true_label(catalog, (t0, t0 + spec.delta_days), spec.m_th)
    try:
        gr = fit_gr(
            catalog, train, catalog.mc, spec.n * spec.delta_days, min_events=min_events, fixed_b=fixed_b
        )
    except InsufficientDataError:
        return TrialResult(0.0, fallback, label, fit_failed=True, truncated=catalog.truncated)
    rate = predicted_rate(gr, spec.n, spec.m_th)
    return TrialResult(rate, binarize(rate, rule), label, truncated=catalog.truncated)


def run_trial(
    params: EtasParams,
    spec: TrialSpec,
    rule: DecisionRule = DecisionRule(),
    seed=0,
    fallback: int = 0,
    min_events: int = 2,
    fixed_b: float | None = None,
    max_events: int = 1_000_000,
) -> TrialResult:
    """Simulate one catalog over the trial horizon and evaluate the baseline on it."""
    start, end = spec.horizon
    catalog = simulate_catalog(params, SimConfig(end - start, seed=seed, max_events=max_events))
    if start != 0:
        catalog = catalog.shifted(start)
    return evaluate_catalog(catalog, spec, rule, fallback, min_events, fixed_b)
