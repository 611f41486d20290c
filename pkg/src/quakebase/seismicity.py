"""Catalog types and the two empirical laws of statistical seismology.

Gutenberg-Richter (GR) frequency-magnitude law and the modified Omori law
(MOL), plus maximum-likelihood estimation of GR parameters from a catalog
window.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

LOG10_E = math.log10(math.e)

CATALOG_HEADER = ("t_days", "magnitude", "generation")


class InsufficientDataError(ValueError):
    """Raised when a GR fit has too few usable events."""

    def __init__(self, count: int, message: str | None = None):
        self.count = count
        super().__init__(message or f"insufficient data for GR fit: {count} events")


@dataclass(frozen=True)
class Event:
    t: float
    m: float
    generation: int = 0


@dataclass
class Catalog:
    """Time-sorted (time, magnitude, generation) records over a horizon.

    Events are held column-wise in numpy arrays; iterate to get `Event`s.
    ``truncated`` is set by the simulator when its event cap was hit.
    """

    t: np.ndarray
    m: np.ndarray
    generation: np.ndarray
    horizon: tuple[float, float]
    mc: float
    truncated: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.m = np.asarray(self.m, dtype=float)
        self.generation = np.asarray(self.generation, dtype=np.int64)
        if not (self.t.shape == self.m.shape == self.generation.shape):
            raise ValueError("t, m and generation must have equal length")
        t_start, t_end = self.horizon
        if t_end < t_start:
            raise ValueError("horizon end precedes start")
        if self.t.size:
            if np.any(np.diff(self.t) < 0):
                raise ValueError("catalog events must be sorted by time")
            if self.t[0] < t_start or self.t[-1] > t_end:
                raise ValueError("catalog events outside horizon")

    @classmethod
    def empty(cls, horizon: tuple[float, float], mc: float) -> "Catalog":
        return cls(np.empty(0), np.empty(0), np.empty(0, dtype=np.int64), horizon, mc)

    @classmethod
    def from_events(cls, events, horizon, mc) -> "Catalog":
        events = sorted(events, key=lambda e: e.t)
        return cls(
            np.array([e.t for e in events], dtype=float),
            np.array([e.m for e in events], dtype=float),
            np.array([e.generation for e in events], dtype=np.int64),
            horizon,
            mc,
        )

    def __len__(self) -> int:
        return int(self.t.size)

    def __iter__(self) -> Iterator[Event]:
        for t, m, g in zip(self.t, self.m, self.generation):
            yield Event(float(t), float(m), int(g))

    @property
    def events(self) -> list[Event]:
        return list(self)

    def window_mask(self, t0: float, t1: float, closed_right: bool = False) -> np.ndarray:
        if closed_right:
            return (self.t >= t0) & (self.t <= t1)
        return (self.t >= t0) & (self.t < t1)

    def shifted(self, offset: float) -> "Catalog":
        return Catalog(
            self.t + offset,
            self.m.copy(),
            self.generation.copy(),
            (self.horizon[0] + offset, self.horizon[1] + offset),
            self.mc,
            self.truncated,
            dict(self.meta),
        )


@dataclass(frozen=True)
class GrParams:
    """GR law parameters; ``a`` is normalized to ``window_days``."""

    a: float
    b: float
    window_days: float = 100.0

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")
        if not self.window_days > 0:
            raise ValueError(f"window_days must be positive, got {self.window_days}")

    def rescaled(self, window_days: float) -> "GrParams":
        """Same rate density, ``a`` re-expressed per ``window_days``."""
        return GrParams(self.a + math.log10(window_days / self.window_days), self.b, window_days)


@dataclass(frozen=True)
class MolParams:
    K: float
    c: float
    p: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.K < 0:
            raise ValueError(f"K must be non-negative, got {self.K}")
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")


def gr_rate(gr: GrParams, m_th):
    """Expected number of events with magnitude >= ``m_th`` per reference window."""
    if np.ndim(m_th):
        return 10.0 ** (gr.a - gr.b * np.asarray(m_th, dtype=float))
    return 10.0 ** (gr.a - gr.b * float(m_th))


def mol_rate(mol: MolParams, t):
    """Aftershock rate K / (t + c)**p in events per day."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("time since mainshock must be non-negative")
    out = mol.K * (t_arr + mol.c) ** (-mol.p)
    return float(out) if out.ndim == 0 else out


def omori_integral(c: float, p: float, T: float) -> float:
    """Integral of (t + c)**(-p) over [0, T]; T may be ``inf`` when p > 1."""
    if T < 0:
        raise ValueError("integration length must be non-negative")
    if p == 1.0:
        return math.log1p(T / c) if math.isfinite(T) else math.inf
    if math.isinf(T):
        return c ** (1.0 - p) / (p - 1.0) if p > 1.0 else math.inf
    # c**(1-p) * (1 - (1 + T/c)**(1-p)) / (p - 1), written to stay accurate for small T
    return -(c ** (1.0 - p)) * math.expm1((1.0 - p) * math.log1p(T / c)) / (p - 1.0)


def sample_magnitudes(b: float, mc: float, m_max: float | None, n: int, rng) -> np.ndarray:
    """Draw ``n`` GR magnitudes above ``mc``, optionally truncated at ``m_max``.

    The density is beta * exp(-beta (m - mc)) with beta = b ln 10, renormalized
    on [mc, m_max) when ``m_max`` is given.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not b > 0:
        raise ValueError("b must be positive")
    beta = b * math.log(10.0)
    u = rng.random(n)
    if m_max is None or math.isinf(m_max):
        return mc - np.log1p(-u) / beta
    if not m_max > mc:
        raise ValueError("m_max must exceed mc")
    mass = -math.expm1(-beta * (m_max - mc))
    m = mc - np.log1p(-u * mass) / beta
    # guard the open upper end against rounding
    return np.minimum(m, np.nextafter(m_max, -math.inf))


def aki_b_value(magnitudes, mc: float) -> float:
    """Aki maximum-likelihood b-value, log10(e) / (mean(m) - mc)."""
    mags = np.asarray(magnitudes, dtype=float)
    excess = float(np.mean(mags)) - mc
    if not excess > 0:
        raise InsufficientDataError(mags.size, "mean magnitude equals mc; b-value undefined")
    return LOG10_E / excess


def fit_gr(
    catalog: Catalog,
    window: tuple[float, float],
    mc: float,
    target_window_days: float,
    min_events: int = 2,
    fixed_b: float | None = None,
) -> GrParams:
    """Estimate GR parameters from events in ``[t0, t1)`` with m >= mc.

    b comes from the Aki estimator unless ``fixed_b`` is given. a is set so
    that ``gr_rate(result, mc)`` equals the window count rescaled to
    ``target_window_days``.

    Raises:
        InsufficientDataError: fewer than ``min_events`` usable events, or
            all magnitudes equal to mc.
    """
    t0, t1 = window
    if not t1 > t0:
        raise ValueError("empty fit window")
    h0, h1 = catalog.horizon
    if t0 < h0 - 1e-9 or t1 > h1 + 1e-9:
        raise ValueError(f"fit window {window} outside catalog horizon {catalog.horizon}")
    mask = catalog.window_mask(t0, t1) & (catalog.m >= mc)
    mags = catalog.m[mask]
    count = int(mags.size)
    if count < max(min_events, 1):
        raise InsufficientDataError(count)
    b = float(fixed_b) if fixed_b is not None else aki_b_value(mags, mc)
    a = math.log10(count * target_window_days / (t1 - t0)) + b * mc
    return GrParams(a=a, b=b, window_days=target_window_days)


def write_catalog_csv(catalog: Catalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CATALOG_HEADER)
        for t, m, g in zip(catalog.t, catalog.m, catalog.generation):
            writer.writerow((repr(float(t)), repr(float(m)), int(g)))


def read_catalog_csv(path, horizon=None, mc: float | None = None) -> Catalog:
    """Read a catalog CSV; horizon defaults to the span of the events."""
    rows = []
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CATALOG_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"catalog CSV missing columns: {sorted(missing)}")
        for row in reader:
            rows.append((float(row["t_days"]), float(row["magnitude"]), int(row["generation"])))
    rows.sort(key=lambda r: r[0])
    t = np.array([r[0] for r in rows], dtype=float)
    m = np.array([r[1] for r in rows], dtype=float)
    g = np.array([r[2] for r in rows], dtype=np.int64)
    if horizon is None:
        horizon = (float(t[0]), float(t[-1])) if t.size else (0.0, 0.0)
    if mc is None:
        mc = float(m.min()) if m.size else 0.0
    return Catalog(t, m, g, tuple(horizon), mc)
