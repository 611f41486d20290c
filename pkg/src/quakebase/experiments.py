"""Monte Carlo studies of the GR baseline on simulated ETAS catalogs.

``run_grid`` fills the (n, m_th) skill grid; ``run_small_sample`` repeats
tiny batches to show how unstable skill scores are with few positives.

Every trial seeds itself from ``SeedSequence(master, spawn_key=key)`` where
the key names the study, cell and trial index, so results do not depend on
worker count, chunking or execution order.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baseline import DEFAULT_RULES, DecisionRule, TrialSpec, run_trial
from .etas import EtasParams, mu_from_a
from .skill import ConfusionCounts, skill

log = logging.getLogger(__name__)

GRID_TAG = 0
SMALL_SAMPLE_TAG = 1
CHUNK = 250


def default_etas(**overrides) -> EtasParams:
    """The experiment's ETAS parameters with K0 read as a branching fraction."""
    base = dict(k0=0.08, alpha=2.04, c=0.011, p=1.08, mc=3.0, b=1.0, m_max=8.0, k0_convention="branching")
    base.update(overrides)
    return EtasParams(**base)


@dataclass(frozen=True)
class GridSpec:
    n_values: tuple[int, ...] = (1, 4, 9)
    m_th_values: tuple[float, ...] = (4.0, 5.0, 6.0, 7.0)
    sims: int = 10_000
    delta_days: float = 100.0
    a_range: tuple[float, float] = (4.0, 6.0)
    rules: tuple[DecisionRule, ...] = DEFAULT_RULES
    seed: int = 0
    fixed_b: float | None = None
    min_events: int = 2
    fallback: int = 0
    max_events: int = 1_000_000

    def __post_init__(self):
        if self.sims < 1:
            raise ValueError("sims must be >= 1")
        if not self.a_range[1] >= self.a_range[0]:
            raise ValueError("a_range must be ordered (low, high)")
        if not self.rules:
            raise ValueError("at least one decision rule is required")
        for n in self.n_values:
            TrialSpec(self.delta_days, n, 5.0)  # validates n
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            raise ValueError("duplicate decision rules")


@dataclass
class CellResult:
    n: int
    m_th: float
    counts: dict[str, ConfusionCounts]
    sims: int = 0
    truncations: int = 0
    fit_failures: int = 0

    def merge(self, other: "CellResult") -> "CellResult":
        if (self.n, self.m_th) != (other.n, other.m_th):
            raise ValueError("cannot merge different cells")
        counts = {k: self.counts[k] + other.counts[k] for k in self.counts}
        return CellResult(
            self.n,
            self.m_th,
            counts,
            self.sims + other.sims,
            self.truncations + other.truncations,
            self.fit_failures + other.fit_failures,
        )


@dataclass
class GridResult:
    spec: GridSpec
    params: EtasParams
    cells: dict[tuple[int, float], CellResult] = field(default_factory=dict)

    def merge(self, other: "GridResult") -> "GridResult":
        cells = dict(self.cells)
        for key, cell in other.cells.items():
            cells[key] = cells[key].merge(cell) if key in cells else cell
        return GridResult(self.spec, self.params, cells)

    @property
    def rule_names(self) -> list[str]:
        return [r.name for r in self.spec.rules]

    def skill(self, n: int, m_th: float, rule: str):
        return skill(self.cells[(n, float(m_th))].counts[rule])

    def surface(self, rule: str, metric: str) -> np.ndarray:
        """Rows follow ``n_values``, columns ``m_th_values``; NaN where undefined."""
        out = np.full((len(self.spec.n_values), len(self.spec.m_th_values)), np.nan)
        for i, n in enumerate(self.spec.n_values):
            for j, m in enumerate(self.spec.m_th_values):
                value = getattr(self.skill(n, m, rule), metric)
                if value is not None:
                    out[i, j] = value
        return out

    def maxima(self) -> dict[str, dict]:
        """Per rule: the best TPR and best R-score and the cells attaining them."""
        out = {}
        for rule in self.rule_names:
            entry = {}
            for metric in ("tpr", "r_score"):
                surf = self.surface(rule, metric)
                if np.all(np.isnan(surf)):
                    entry[metric] = None
                    continue
                i, j = np.unravel_index(np.nanargmax(surf), surf.shape)
                entry[metric] = {
                    "value": float(surf[i, j]),
                    "n": int(self.spec.n_values[i]),
                    "m_th": float(self.spec.m_th_values[j]),
                }
            out[rule] = entry
        return out

    def to_json(self) -> dict:
        cells = {}
        for (n, m_th), cell in sorted(self.cells.items()):
            rules = {}
            for name, counts in cell.counts.items():
                rep = skill(counts)
                rules[name] = {**counts.as_dict(), "tpr": rep.tpr, "tnr": rep.tnr, "r": rep.r_score}
            cells[f"n={n},m_th={m_th:g}"] = {
                "n": n,
                "m_th": m_th,
                "sims": cell.sims,
                "truncations": cell.truncations,
                "fit_failures": cell.fit_failures,
                "rules": rules,
            }
        return {
            "cells": cells,
            "meta": {
                "seed": self.spec.seed,
                "sims": self.spec.sims,
                "truncations": sum(c.truncations for c in self.cells.values()),
                "fit_failures": sum(c.fit_failures for c in self.cells.values()),
                "rules": self.rule_names,
            },
        }


def trial_seeds(master: int, key: tuple[int, ...]) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Independent streams for the a-value draw and the catalog simulation."""
    return (
        np.random.SeedSequence(master, spawn_key=key + (0,)),
        np.random.SeedSequence(master, spawn_key=key + (1,)),
    )


def _m_key(m_th: float) -> int:
    return int(round(m_th * 1000))


def _trial(params: EtasParams, spec: GridSpec, n: int, m_th: float, key: tuple[int, ...]):
    a_seed, sim_seed = trial_seeds(spec.seed, key)
    a = float(np.random.default_rng(a_seed).uniform(*spec.a_range))
    mu = mu_from_a(a, params.b, params.mc, spec.delta_days)
    return run_trial(
        params.with_mu(mu),
        TrialSpec(spec.delta_days, n, m_th),
        spec.rules[0],
        seed=sim_seed,
        fallback=spec.fallback,
        min_events=spec.min_events,
        fixed_b=spec.fixed_b,
        max_events=spec.max_events,
    )


def _tally(spec: GridSpec, n: int, m_th: float, results) -> CellResult:
    tallies = {r.name: [0, 0, 0, 0] for r in spec.rules}
    sims = truncations = failures = 0
    for res in results:
        sims += 1
        truncations += res.truncated
        failures += res.fit_failed
        for rule in spec.rules:
            pred = res.label_for(rule, spec.fallback)
            slot = tallies[rule.name]
            if res.true_label:
                slot[0 if pred else 1] += 1
            else:
                slot[3 if pred else 2] += 1
    counts = {k: ConfusionCounts(*v) for k, v in tallies.items()}
    return CellResult(n, float(m_th), counts, sims, truncations, failures)


def _grid_chunk(params: EtasParams, spec: GridSpec, n: int, m_th: float, start: int, stop: int) -> CellResult:
    results = (
        _trial(params, spec, n, m_th, (GRID_TAG, n, _m_key(m_th), idx)) for idx in range(start, stop)
    )
    return _tally(spec, n, m_th, results)


def _map(fn, tasks, workers: int | None):
    workers = workers or 1
    if workers == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def run_grid(
    spec: GridSpec,
    params: EtasParams | None = None,
    workers: int | None = 1,
    start: int = 0,
    stop: int | None = None,
) -> GridResult:
    """Run trials ``start..stop`` (default all ``spec.sims``) of every cell.

    Disjoint index ranges merge (``GridResult.merge``) into exactly the
    counts of a single run over their union.
    """
    params = params or default_etas()
    stop = spec.sims if stop is None else stop
    if not 0 <= start <= stop:
        raise ValueError("invalid trial index range")
    tasks = []
    for n in spec.n_values:
        for m_th in spec.m_th_values:
            for lo in range(start, stop, CHUNK):
                tasks.append((params, spec, n, float(m_th), lo, min(lo + CHUNK, stop)))
    log.info("grid: %d chunks, workers=%s", len(tasks), workers)
    result = GridResult(spec, params)
    for part in _map(_grid_chunk, tasks, workers):
        key = (part.n, part.m_th)
        result.cells[key] = result.cells[key].merge(part) if key in result.cells else part
    for n in spec.n_values:
        for m_th in spec.m_th_values:
            key = (n, float(m_th))
            if key not in result.cells:
                empty = {r.name: ConfusionCounts() for r in spec.rules}
                result.cells[key] = CellResult(n, float(m_th), empty)
    return result


@dataclass
class SmallSampleResult:
    n: int
    reps: int
    batch: int
    # (m_th, rule) -> per-rep R-score, None where undefined
    r_values: dict[tuple[float, str], list[float | None]]

    def undefined(self, m_th: float, rule: str) -> int:
        return sum(v is None for v in self.r_values[(m_th, rule)])

    def spread(self, m_th: float | None = None, rule: str | None = None) -> tuple[float, float] | None:
        """(min, max) of defined per-rep R, optionally restricted to one m_th / rule."""
        values = [
            v
            for (m, r), vals in self.r_values.items()
            if (m_th is None or m == m_th) and (rule is None or r == rule)
            for v in vals
            if v is not None
        ]
        return (min(values), max(values)) if values else None

    def to_json(self) -> dict:
        out = {}
        for (m_th, rule), vals in sorted(self.r_values.items()):
            spread = self.spread(m_th, rule)
            out.setdefault(f"m_th={m_th:g}", {})[rule] = {
                "r_values": vals,
                "undefined": self.undefined(m_th, rule),
                "min_r": spread[0] if spread else None,
                "max_r": spread[1] if spread else None,
            }
        union = self.spread()
        return {
            "n": self.n,
            "reps": self.reps,
            "batch": self.batch,
            "results": out,
            "union_min_r": union[0] if union else None,
            "union_max_r": union[1] if union else None,
        }


def _small_rep(params: EtasParams, spec: GridSpec, n: int, m_th: float, rep: int, batch: int) -> dict[str, float | None]:
    results = [
        _trial(params, spec, n, m_th, (SMALL_SAMPLE_TAG, n, _m_key(m_th), rep, i)) for i in range(batch)
    ]
    cell = _tally(spec, n, m_th, results)
    return {name: skill(c).r_score for name, c in cell.counts.items()}


def run_small_sample(
    m_th_values=(6.0, 7.0),
    reps: int = 100,
    batch: int = 10,
    seed: int = 0,
    n: int = 4,
    params: EtasParams | None = None,
    spec: GridSpec | None = None,
    workers: int | None = 1,
) -> SmallSampleResult:
    """``reps`` independent batches of ``batch`` trials at each threshold.

    ``spec`` supplies the trial settings (rules, a-range, delta, fallback);
    its seed is replaced by ``seed``.
    """
    if batch < 1 or reps < 1:
        raise ValueError("reps and batch must be >= 1")
    params = params or default_etas()
    spec = replace(spec or GridSpec(), seed=seed)
    tasks = [(params, spec, n, float(m), rep, batch) for m in m_th_values for rep in range(reps)]
    outputs = _map(_small_rep, tasks, workers)
    r_values: dict[tuple[float, str], list] = {}
    for (_, _, _, m, _, _), rs in zip(tasks, outputs):
        for rule, r in rs.items():
            r_values.setdefault((m, rule), []).append(r)
    return SmallSampleResult(n, reps, batch, r_values)


def _rule_slug(name: str) -> str:
    return name.replace(">=", "_ge_").replace("/", "_")


def write_heatmaps(result: GridResult, outdir) -> list[Path]:
    """Two CSVs per rule (TPR and R-score): rows Δr = 1/n, columns m_th."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for rule in result.rule_names:
        for metric, label in (("tpr", "tpr"), ("r_score", "r")):
            surf = result.surface(rule, metric)
            path = outdir / f"heatmap_{label}_{_rule_slug(rule)}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["delta_r"] + [f"{m:g}" for m in result.spec.m_th_values])
                for i, n in enumerate(result.spec.n_values):
                    row = ["" if math.isnan(v) else repr(float(v)) for v in surf[i]]
                    writer.writerow([f"1/{n}"] + row)
            paths.append(path)
    return paths


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
