"""Temporal ETAS model: conditional intensity and branching simulation.

The intensity is

    lambda(t) = mu + sum_{t_i < t} K0 exp(alpha (m_i - mc)) (t - t_i + c)**(-p)

Catalogs are simulated cluster-wise: a homogeneous Poisson background, then
generation by generation each event spawns a Poisson number of direct
offspring over the remaining horizon, placed by inverse-CDF sampling of the
truncated Omori density. Offspring that would fall past the horizon are never
drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Literal

import numpy as np

from .seismicity import Catalog, Event, omori_integral, sample_magnitudes

K0Convention = Literal["rate", "branching"]


@dataclass(frozen=True)
class EtasParams:
    """ETAS parameters. Defaults are alpha=2.04, K0=0.08, c=0.011, p=1.08, mc=3.

    ``k0_convention`` fixes how ``k0`` enters the kernel:

    * ``"rate"``: ``k0`` is the literal coefficient of (t - t_i + c)**(-p).
    * ``"branching"``: ``k0`` is the expected number of direct offspring of an
      ``mc`` event over infinite time; the kernel coefficient becomes
      ``k0 * (p - 1) * c**(p - 1)``.
    """

    mu: float = 1.0
    k0: float = 0.08
    alpha: float = 2.04
    c: float = 0.011
    p: float = 1.08
    mc: float = 3.0
    b: float = 1.0
    m_max: float | None = 8.0
    k0_convention: K0Convention = "rate"

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"mu must be non-negative, got {self.mu}")
        if self.k0 < 0:
            raise ValueError(f"k0 must be non-negative, got {self.k0}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1 for a finite offspring integral, got {self.p}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")
        if self.m_max is not None and not self.m_max > self.mc:
            raise ValueError("m_max must exceed mc")
        if self.k0_convention not in ("rate", "branching"):
            raise ValueError(f"unknown k0_convention {self.k0_convention!r}")

    @property
    def kernel_k0(self) -> float:
        """Coefficient multiplying exp(alpha (m - mc)) (t + c)**(-p)."""
        if self.k0_convention == "branching":
            return self.k0 * (self.p - 1.0) * self.c ** (self.p - 1.0)
        return self.k0

    def productivity(self, m):
        return self.kernel_k0 * np.exp(self.alpha * (np.asarray(m, dtype=float) - self.mc))

    def with_mu(self, mu: float) -> "EtasParams":
        return replace(self, mu=mu)


@dataclass(frozen=True)
class SimConfig:
    horizon_days: float
    seed: int | np.random.SeedSequence = 0
    max_events: int = 1_000_000
    a_value: float | None = None
    window_days: float = 100.0

    def __post_init__(self):
        if not self.horizon_days > 0:
            raise ValueError("horizon_days must be positive")
        if not self.max_events > 0:
            raise ValueError("max_events must be positive")


def mu_from_a(a: float, b: float, mc: float, window_days: float) -> float:
    """Background rate (events/day above mc) for activity ``a`` per window."""
    if not window_days > 0:
        raise ValueError("window_days must be positive")
    return 10.0 ** (a - b * mc) / window_days


def conditional_intensity(params: EtasParams, history: Catalog, t: float) -> float:
    earlier = history.t < t
    if not np.any(earlier):
        return params.mu
    dt = t - history.t[earlier]
    terms = params.productivity(history.m[earlier]) * (dt + params.c) ** (-params.p)
    return params.mu + float(np.sum(terms))


def expected_offspring(params: EtasParams, m: float, T: float = math.inf) -> float:
    """Expected direct aftershocks (>= mc) of a magnitude-``m`` event within ``T`` days."""
    if T < 0:
        raise ValueError("remaining horizon must be non-negative")
    if params.kernel_k0 == 0:
        return 0.0
    return float(params.productivity(m)) * omori_integral(params.c, params.p, T)


def mean_productivity_factor(params: EtasParams) -> float:
    """E[exp(alpha (m - mc))] under the (possibly truncated) GR magnitude law."""
    beta = params.b * math.log(10.0)
    gap = beta - params.alpha
    if params.m_max is None:
        return beta / gap if gap > 0 else math.inf
    span = params.m_max - params.mc
    norm = -math.expm1(-beta * span)
    if gap == 0:
        return beta * span / norm
    return beta / gap * (-math.expm1(-gap * span)) / norm


def branching_ratio(params: EtasParams, T: float = math.inf) -> float:
    """Magnitude-averaged number of direct offspring per event."""
    if params.kernel_k0 == 0:
        return 0.0
    return params.kernel_k0 * mean_productivity_factor(params) * omori_integral(params.c, params.p, T)


def _omori_times(u: np.ndarray, remaining: np.ndarray, c: float, p: float) -> np.ndarray:
    # inverse CDF of (s + c)**(-p) restricted to [0, remaining]
    q = 1.0 - p
    frac = -np.expm1(q * np.log1p(remaining / c))  # 1 - (1 + R/c)**(1-p)
    s = c * np.expm1(np.log1p(-u * frac) / q)
    return np.clip(s, 0.0, remaining)


def simulate_catalog(
    params: EtasParams,
    config: SimConfig,
    forced: Iterable[Event] = (),
) -> Catalog:
    """Simulate an ETAS catalog on ``[0, config.horizon_days]``.

    Forced events are inserted as generation-0 parents alongside the
    background. If the cascade exceeds ``config.max_events`` the catalog is
    cut to that many events and flagged ``truncated``.
    """
    rng = np.random.default_rng(config.seed)
    T = float(config.horizon_days)
    mu = params.mu
    if config.a_value is not None:
        mu = mu_from_a(config.a_value, params.b, params.mc, config.window_days)

    n_bg = int(rng.poisson(mu * T)) if mu > 0 else 0
    t = rng.random(n_bg) * T
    m = sample_magnitudes(params.b, params.mc, params.m_max, n_bg, rng)
    forced = list(forced)
    if forced:
        ft = np.array([e.t for e in forced], dtype=float)
        if np.any((ft < 0) | (ft > T)):
            raise ValueError("forced events must lie inside the horizon")
        t = np.concatenate([t, ft])
        m = np.concatenate([m, [e.m for e in forced]])

    times = [t]
    mags = [m]
    gens = [np.zeros(t.size, dtype=np.int64)]
    total = t.size
    generation = 0
    truncated = False
    while t.size and params.kernel_k0 > 0:
        if total >= config.max_events:
            truncated = True
            break
        generation += 1
        remaining = T - t
        q = 1.0 - params.p
        integral = -(params.c**q) * np.expm1(q * np.log1p(remaining / params.c)) / (params.p - 1.0)
        counts = rng.poisson(params.productivity(m) * integral)
        n_kids = int(counts.sum())
        if n_kids == 0:
            break
        parent_t = np.repeat(t, counts)
        parent_rem = np.repeat(remaining, counts)
        t = parent_t + _omori_times(rng.random(n_kids), parent_rem, params.c, params.p)
        m = sample_magnitudes(params.b, params.mc, params.m_max, n_kids, rng)
        times.append(t)
        mags.append(m)
        gens.append(np.full(n_kids, generation, dtype=np.int64))
        total += n_kids

    t_all = np.concatenate(times)
    m_all = np.concatenate(mags)
    g_all = np.concatenate(gens)
    if t_all.size > config.max_events:
        # keep the earliest generations, which are complete
        t_all = t_all[: config.max_events]
        m_all = m_all[: config.max_events]
        g_all = g_all[: config.max_events]
        truncated = True
    order = np.argsort(t_all, kind="stable")
    return Catalog(
        t_all[order],
        m_all[order],
        g_all[order],
        (0.0, T),
        params.mc,
        truncated=bool(truncated),
        meta={"mu": mu, "generations": generation},
    )
