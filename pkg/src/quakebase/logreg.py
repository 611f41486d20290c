"""Single-neuron (logistic regression) aftershock baselines.

Features are addressed by name and carry a transform: ``raw``, ``log`` or
``neglog`` (minus the natural log). With features ``(r, neglog)`` and
``(d, log)`` the model is the distance/slip power law

    Pr(Y=1 | r, d) = 1 / (1 + exp(-b0) * r**b1 * d**(-b2)).

Also here: distance from a point to a finite rectangular rupture, and a
synthetic cell-grid generator with planted labels for validating the fit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .skill import roc_auc
from .stress import FEATURE_NAMES, feature_vector_12, max_shear, metric_A, von_mises

TRANSFORMS = ("raw", "log", "neglog")


class ConvergenceError(RuntimeError):
    def __init__(self, grad_norm: float, n_iter: int):
        self.grad_norm = grad_norm
        self.n_iter = n_iter
        super().__init__(f"no convergence after {n_iter} iterations (gradient norm {grad_norm:.3g})")


@dataclass(frozen=True)
class Feature:
    name: str
    transform: str = "raw"

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")

    @classmethod
    def parse(cls, text: str) -> "Feature":
        name, _, transform = text.partition(":")
        return cls(name.strip(), transform.strip() or "raw")

    def __str__(self) -> str:
        return self.name if self.transform == "raw" else f"{self.name}:{self.transform}"


FEATURE_PRESETS = {
    "rd": (Feature("r", "neglog"), Feature("d", "log")),
    "A": (Feature("A"),),
    "von_mises": (Feature("von_mises"),),
    "max_shear": (Feature("max_shear"),),
    "stress12": tuple(Feature(n) for n in FEATURE_NAMES),
}


def parse_feature_spec(text: str | Sequence) -> tuple[Feature, ...]:
    """Preset name, comma-separated ``name[:transform]`` list, or a sequence."""
    if isinstance(text, str):
        if text in FEATURE_PRESETS:
            return FEATURE_PRESETS[text]
        items = [t for t in text.split(",") if t.strip()]
    else:
        items = list(text)
    spec = tuple(f if isinstance(f, Feature) else Feature.parse(str(f)) for f in items)
    if not spec:
        raise ValueError("empty feature spec")
    return spec


@dataclass
class FitInfo:
    n_iter: int
    grad_norm: float
    converged: bool
    capped: bool = False
    objective: list[float] = field(default_factory=list)


@dataclass
class LogisticModel:
    intercept: float
    weights: np.ndarray
    feature_spec: tuple[Feature, ...]
    info: FitInfo | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        self.feature_spec = parse_feature_spec(self.feature_spec)
        if self.weights.size != len(self.feature_spec):
            raise ValueError("weight count must equal feature count")

    def to_json(self) -> dict:
        return {
            "intercept": float(self.intercept),
            "weights": [float(w) for w in self.weights],
            "feature_spec": [str(f) for f in self.feature_spec],
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "LogisticModel":
        return cls(payload["intercept"], payload["weights"], payload["feature_spec"])

    def power_law(self) -> tuple[float, float, float]:
        """(exp(-b0), b1, b2) for an ``r:neglog, d:log`` model."""
        if self.feature_spec != FEATURE_PRESETS["rd"]:
            raise ValueError("power-law form needs the (r:neglog, d:log) feature spec")
        return math.exp(-self.intercept), float(self.weights[0]), float(self.weights[1])


# ---------------------------------------------------------------- geometry


@dataclass(frozen=True)
class RuptureGeom:
    """Rectangular rupture. x east, y north, z up, all in km.

    Strike is clockwise from north in degrees; the plane dips to the right of
    strike by ``dip_deg``. ``slip_m`` is the mean slip.
    """

    center: tuple[float, float, float] = (0.0, 0.0, -10.0)
    strike_deg: float = 0.0
    dip_deg: float = 90.0
    length_km: float = 40.0
    width_km: float = 15.0
    slip_m: float = 1.0

    def __post_init__(self):
        if not (self.length_km > 0 and self.width_km > 0):
            raise ValueError("rupture length and width must be positive")
        if not self.slip_m > 0:
            raise ValueError("mean slip must be positive")

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unit vectors along strike, down dip, and normal to the plane."""
        phi = math.radians(self.strike_deg)
        delta = math.radians(self.dip_deg)
        along = np.array([math.sin(phi), math.cos(phi), 0.0])
        horiz = np.array([math.cos(phi), -math.sin(phi), 0.0])
        down = math.cos(delta) * horiz + np.array([0.0, 0.0, -math.sin(delta)])
        normal = np.cross(along, down)
        return along, down, normal


def distance_to_rupture(points, geom: RuptureGeom):
    """Euclidean distance (km) from point(s) to the finite rupture rectangle."""
    pts = np.asarray(points, dtype=float)
    rel = pts - np.asarray(geom.center, dtype=float)
    along, down, normal = geom.axes()
    u = rel @ along
    v = rel @ down
    w = rel @ normal
    du = u - np.clip(u, -geom.length_km / 2, geom.length_km / 2)
    dv = v - np.clip(v, -geom.width_km / 2, geom.width_km / 2)
    dist = np.sqrt(du**2 + dv**2 + w**2)
    return float(dist) if dist.ndim == 0 else dist


# ------------------------------------------------------------------ samples


@dataclass(frozen=True)
class CellSample:
    r: float
    d: float
    label: int
    stress: np.ndarray | None = None


@dataclass
class CellTable:
    """Column store of cells; indexes and iterates as ``CellSample``."""

    r: np.ndarray
    d: np.ndarray
    label: np.ndarray
    stress: np.ndarray | None = None

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.d = np.broadcast_to(np.asarray(self.d, dtype=float), self.r.shape).copy()
        self.label = np.asarray(self.label, dtype=int)
        if self.stress is not None:
            self.stress = np.asarray(self.stress, dtype=float).reshape(-1, 6)

    def __len__(self) -> int:
        return int(self.r.size)

    def __getitem__(self, i) -> CellSample:
        stress = None if self.stress is None else self.stress[i]
        return CellSample(float(self.r[i]), float(self.d[i]), int(self.label[i]), stress)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def concat(cls, tables: Sequence["CellTable"]) -> "CellTable":
        stress = None
        if all(t.stress is not None for t in tables):
            stress = np.concatenate([t.stress for t in tables])
        return cls(
            np.concatenate([t.r for t in tables]),
            np.concatenate([t.d for t in tables]),
            np.concatenate([t.label for t in tables]),
            stress,
        )

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"r": self.r, "d": self.d, "label": self.label}
        if self.stress is not None:
            cols.update(stress_columns(self.stress))
        return cols

    def subset(self, idx) -> "CellTable":
        stress = None if self.stress is None else self.stress[idx]
        return CellTable(self.r[idx], self.d[idx], self.label[idx], stress)


def stress_columns(components) -> dict[str, np.ndarray]:
    comps = np.asarray(components, dtype=float).reshape(-1, 6)
    cols = dict(zip(FEATURE_NAMES, feature_vector_12(comps).T))
    cols["A"] = np.asarray(metric_A(comps))
    cols["von_mises"] = np.asarray(von_mises(comps))
    cols["max_shear"] = np.asarray(max_shear(comps))
    return cols


def as_columns(samples) -> dict[str, np.ndarray]:
    if isinstance(samples, CellTable):
        return samples.columns()
    if isinstance(samples, Mapping):
        cols = {k: np.asarray(v) for k, v in samples.items()}
        if "A" not in cols and all(f"abs_{c}" in cols for c in ("xx", "yy", "zz", "xy", "xz", "yz")):
            cols["A"] = sum(cols[f"abs_{c}"].astype(float) for c in ("xx", "yy", "zz", "xy", "xz", "yz"))
        return cols
    samples = list(samples)
    stress = None
    if samples and all(s.stress is not None for s in samples):
        stress = np.array([np.asarray(s.stress, dtype=float) for s in samples])
    table = CellTable(
        [s.r for s in samples], [s.d for s in samples], [s.label for s in samples], stress
    )
    return table.columns()


def design_matrix(feature_spec, samples) -> np.ndarray:
    cols = as_columns(samples)
    out = []
    for feat in parse_feature_spec(feature_spec):
        if feat.name not in cols:
            raise KeyError(f"feature {feat.name!r} not available in samples")
        x = np.asarray(cols[feat.name], dtype=float)
        if feat.transform != "raw":
            if np.any(x <= 0):
                raise ValueError(f"log transform of non-positive values in feature {feat.name!r}")
            x = np.log(x) if feat.transform == "log" else -np.log(x)
        out.append(x)
    return np.column_stack(out) if out else np.empty((0, 0))


def labels_of(samples) -> np.ndarray:
    return np.asarray(as_columns(samples)["label"], dtype=int)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def predict_prob(model: LogisticModel, samples):
    x = design_matrix(model.feature_spec, samples)
    return sigmoid(model.intercept + x @ model.weights)


def power_law_prob(beta0_hat: float, beta1: float, beta2: float, r, d):
    return 1.0 / (1.0 + beta0_hat * np.asarray(r, dtype=float) ** beta1 * np.asarray(d, dtype=float) ** (-beta2))


# --------------------------------------------------------------------- fit


def objective(theta, x, y, lam: float = 0.0) -> float:
    """Mean cross-entropy plus lam/2 * |weights|^2; theta = [intercept, *weights]."""
    theta = np.asarray(theta, dtype=float)
    z = theta[0] + x @ theta[1:]
    ce = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(ce + 0.5 * lam * theta[1:] @ theta[1:])


def gradient(theta, x, y, lam: float = 0.0) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    resid = sigmoid(theta[0] + x @ theta[1:]) - y
    g = np.empty_like(theta)
    g[0] = resid.mean()
    g[1:] = x.T @ resid / y.size + lam * theta[1:]
    return g


def fit(
    samples,
    feature_spec="rd",
    lam: float = 0.0,
    tol: float = 1e-8,
    max_iter: int | None = None,
    max_norm: float = 1e3,
    record_objective: bool = False,
    method: str = "newton",
) -> LogisticModel:
    """Minimize mean cross-entropy + lam/2 |weights|^2 from zeros.

    Iterates on standardized features (an exact affine reparameterization;
    the penalty stays on the original weights) until the gradient norm in
    original coordinates is <= ``tol``. ``method`` picks the search
    direction: ``"gd"`` is plain gradient descent, ``"newton"`` solves with
    the exact Hessian (least squares, so collinear features are fine). Both
    use Armijo backtracking, so the objective never increases.

    Separable data with ``lam == 0`` has no finite optimum. Once an iterate
    separates the classes the loss only falls along its ray, so the weights
    are scaled out to ``max_norm`` and ``info.capped`` is set.

    Raises:
        ValueError: only one class present, or unknown method.
        ConvergenceError: ``max_iter`` reached without convergence.
    """
    if method not in ("newton", "gd"):
        raise ValueError(f"unknown fit method {method!r}")
    if max_iter is None:
        max_iter = 500 if method == "newton" else 50_000
    spec = parse_feature_spec(feature_spec)
    x = design_matrix(spec, samples)
    y = labels_of(samples).astype(float)
    if y.size == 0 or y.min() == y.max():
        raise ValueError("logistic fit needs samples of both classes")
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    xs = np.column_stack([np.ones(y.size), (x - mean) / scale])
    n = y.size
    pos = y == 1.0
    pen = np.r_[0.0, lam / scale**2]

    def to_original(g):
        w = g[1:] / scale
        return np.r_[g[0] - w @ mean, w]

    def evaluate(g):
        z = xs @ g
        # residual sigmoid(z) - y without cancellation for either class
        resid = np.where(pos, -sigmoid(-z), sigmoid(z))
        f = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * g @ (pen * g)
        grad = xs.T @ resid / n + pen * g
        orig = np.r_[grad[0], scale * grad[1:] + mean * grad[0]]
        return f, grad, orig, z

    def separates(z):
        return lam == 0 and bool(np.all(z[pos] > 0) and np.all(z[~pos] < 0))

    g = np.zeros(xs.shape[1])
    f, grad, orig, z = evaluate(g)
    history = [f] if record_objective else []
    capped = False
    it = 0
    step = 1.0
    while np.linalg.norm(orig) > tol and it < max_iter:
        it += 1
        if method == "newton":
            sz = sigmoid(z)
            hess = (xs * (sz * (1.0 - sz))[:, None]).T @ xs / n + np.diag(pen)
            direction = np.linalg.lstsq(hess, grad, rcond=None)[0]
            slope = grad @ direction
            if not slope > 0:
                direction, slope = grad, grad @ grad
            t = 1.0
        else:
            direction, slope = grad, grad @ grad
            step = min(step * 2.0, 1e6)
            t = step
        while True:
            cand = g - t * direction
            f_new, grad_new, orig_new, z_new = evaluate(cand)
            if f_new <= f - 0.5 * t * slope:
                break
            t *= 0.5
            if t < 1e-20:
                break
        if t < 1e-20 or f_new > f:
            # no further decrease representable in floating point
            break
        if method == "gd":
            step = t
        g, f, grad, orig, z = cand, f_new, grad_new, orig_new, z_new
        if record_objective:
            history.append(f)
        wnorm = np.linalg.norm(to_original(g)[1:])
        if separates(z) and wnorm > 0:
            g = g * max(1.0, max_norm / wnorm * (1.0 + 1e-12))
            f, grad, orig, z = evaluate(g)
            if record_objective:
                history.append(f)
            capped = True
            break
        if wnorm > max_norm:
            capped = True
            break
    gnorm = float(np.linalg.norm(orig))
    converged = gnorm <= tol and not capped
    if not converged and not capped:
        raise ConvergenceError(gnorm, it)
    theta = to_original(g)
    info = FitInfo(it, gnorm, converged, capped, history)
    return LogisticModel(float(theta[0]), theta[1:], spec, info)


def evaluate_auc(model: LogisticModel, samples) -> float | None:
    return roc_auc(predict_prob(model, samples), labels_of(samples))


# --------------------------------------------------------------- synthetic


@dataclass(frozen=True)
class CellGrid:
    """Regular grid of cell centres around the rupture centre."""

    extent_km: float = 50.0
    spacing_km: float = 2.0
    depth_extent_km: float = 10.0
    r_floor_km: float | None = None

    def points(self, center) -> np.ndarray:
        cx, cy, cz = center
        h = np.arange(-self.extent_km, self.extent_km + 1e-9, self.spacing_km)
        v = np.arange(-self.depth_extent_km, self.depth_extent_km + 1e-9, self.spacing_km)
        xx, yy, zz = np.meshgrid(cx + h, cy + h, cz + v, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])


def synthetic_stress(r, d, rng, r0_km: float = 1.0, drop_mpa: float = 3.0) -> np.ndarray:
    """Random-orientation stress changes whose size scales as d * (1 + r/r0)**-3."""
    r = np.asarray(r, dtype=float)
    shape = rng.normal(size=(r.size, 6))
    shape /= np.linalg.norm(shape, axis=1, keepdims=True)
    amp = drop_mpa * np.asarray(d, dtype=float) * (1.0 + r / r0_km) ** -3
    return shape * np.broadcast_to(amp, r.shape)[:, None]


def sample_cells(
    n: int,
    truth: LogisticModel,
    seed=0,
    r_range: tuple[float, float] = (0.5, 200.0),
    d_range: tuple[float, float] = (0.05, 10.0),
    with_stress: bool = False,
) -> CellTable:
    """``n`` cells with log-uniform r (km) and d (m), labelled by ``truth``."""
    if n < 1:
        raise ValueError("need at least one cell")
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(math.log(r_range[0]), math.log(r_range[1]), n))
    d = np.exp(rng.uniform(math.log(d_range[0]), math.log(d_range[1]), n))
    prob = predict_prob(truth, {"r": r, "d": d, "label": np.zeros(n, dtype=int)})
    label = (rng.random(n) < prob).astype(int)
    stress = synthetic_stress(r, d, rng) if with_stress else None
    return CellTable(r, d, label, stress)


def synth_grid(
    geom: RuptureGeom,
    grid: CellGrid,
    truth: LogisticModel,
    seed=0,
    with_stress: bool = False,
) -> CellTable:
    """Cells around ``geom`` labelled by Bernoulli draws from ``truth``.

    ``truth`` must use only the ``r`` and ``d`` features. Distances are
    floored at ``grid.r_floor_km`` (default half the spacing) so log r exists.
    """
    if any(f.name not in ("r", "d") for f in truth.feature_spec):
        raise ValueError("truth model may only use the r and d features")
    pts = grid.points(geom.center)
    if pts.shape[0] == 0:
        raise ValueError("degenerate grid: zero cells")
    rng = np.random.default_rng(seed)
    floor = grid.r_floor_km if grid.r_floor_km is not None else grid.spacing_km / 2.0
    r = np.maximum(distance_to_rupture(pts, geom), floor)
    d = np.full(r.shape, geom.slip_m)
    prob = predict_prob(truth, {"r": r, "d": d, "label": np.zeros(r.size, dtype=int)})
    label = (rng.random(r.size) < prob).astype(int)
    stress = synthetic_stress(r, d, rng) if with_stress else None
    return CellTable(r, d, label, stress)


# ---------------------------------------------------------------------- io


def read_table_csv(path) -> dict[str, np.ndarray]:
    """Read a numeric CSV (cell or feature table) into columns; needs ``label``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = list(reader.fieldnames or [])
        rows = list(reader)
    if "label" not in fields:
        raise ValueError(f"{path}: missing 'label' column")
    cols = {}
    for name in fields:
        values = [row[name] for row in rows]
        cols[name] = np.array([int(v) for v in values]) if name == "label" else np.array(values, dtype=float)
    if "r_km" in cols:
        cols["r"] = cols.pop("r_km")
    if "d_m" in cols:
        cols["d"] = cols.pop("d_m")
    return cols


def write_cells_csv(table: CellTable, path, include_stress: bool = False) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["r_km", "d_m"]
        extra = include_stress and table.stress is not None
        if extra:
            header += list(FEATURE_NAMES)
            feats = feature_vector_12(table.stress)
        writer.writerow(header + ["label"])
        for i in range(len(table)):
            row = [repr(float(table.r[i])), repr(float(table.d[i]))]
            if extra:
                row += [repr(float(v)) for v in feats[i]]
            writer.writerow(row + [int(table.label[i])])


def write_model_json(model: LogisticModel, path, extra: Mapping | None = None) -> None:
    payload = model.to_json()
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
