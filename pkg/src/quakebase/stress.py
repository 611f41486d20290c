"""Scalar stress-change metrics and the 12-component absolute-value feature vector.

Tensors are given either as :class:`StressTensor3` or as arrays whose last
axis holds the six independent components in the order
``(xx, yy, zz, xy, xz, yz)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

COMPONENTS = ("xx", "yy", "zz", "xy", "xz", "yz")
# column order of the 12-feature vector
FEATURE_ORDER = ("xx", "xy", "xz", "yy", "yz", "zz")
FEATURE_NAMES = tuple(f"abs_{c}" for c in FEATURE_ORDER) + tuple(
    f"neg_abs_{c}" for c in FEATURE_ORDER
)
TENSOR_HEADER = tuple(f"s{c}" for c in COMPONENTS)

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class StressTensor3:
    xx: float = 0.0
    yy: float = 0.0
    zz: float = 0.0
    xy: float = 0.0
    xz: float = 0.0
    yz: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise ValueError("stress components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.xx, self.yy, self.zz, self.xy, self.xz, self.yz], dtype=float)

    def as_matrix(self) -> np.ndarray:
        return components_to_matrix(self.as_array())

    @classmethod
    def from_matrix(cls, mat) -> "StressTensor3":
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (3, 3):
            raise ValueError("expected a 3x3 matrix")
        sym = 0.5 * (mat + mat.T)
        return cls(sym[0, 0], sym[1, 1], sym[2, 2], sym[0, 1], sym[0, 2], sym[1, 2])

    def scaled(self, k: float) -> "StressTensor3":
        return StressTensor3(*(k * self.as_array()))


def _components(s) -> np.ndarray:
    if isinstance(s, StressTensor3):
        return s.as_array()
    arr = np.asarray(s, dtype=float)
    if arr.shape[-1] != 6:
        raise ValueError("last axis must hold 6 stress components")
    return arr


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def components_to_matrix(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    xx, yy, zz, xy, xz, yz = np.moveaxis(c, -1, 0)
    rows = [
        np.stack([xx, xy, xz], axis=-1),
        np.stack([xy, yy, yz], axis=-1),
        np.stack([xz, yz, zz], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def metric_A(s):
    """Sum of absolute values of the six independent components."""
    return _scalar_or_array(np.sum(np.abs(_components(s)), axis=-1))


def deviatoric(s) -> np.ndarray:
    """Deviatoric part s - tr(s)/3 I, returned as components."""
    c = _components(s).copy()
    mean = c[..., :3].sum(axis=-1, keepdims=True) / 3.0
    c[..., :3] -= mean
    return c


def von_mises(s):
    """sqrt(3 J2) with J2 = 1/2 s'_ij s'_ij over all nine entries."""
    d = deviatoric(s)
    j2 = 0.5 * (np.sum(d[..., :3] ** 2, axis=-1) + 2.0 * np.sum(d[..., 3:] ** 2, axis=-1))
    return _scalar_or_array(np.sqrt(3.0 * j2))


def von_mises_invariant_form(s):
    """sqrt(I1(s')**2 - 3 I2(s')) written with the principal invariants."""
    d = deviatoric(s)
    xx, yy, zz, xy, xz, yz = np.moveaxis(d, -1, 0)
    i1 = xx + yy + zz
    i2 = xx * yy + yy * zz + zz * xx - xy**2 - xz**2 - yz**2
    return _scalar_or_array(np.sqrt(np.maximum(i1**2 - 3.0 * i2, 0.0)))


def jacobi_eigenvalues(mat, tol: float = 1e-15, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of one symmetric matrix by cyclic Jacobi rotations, descending."""
    a = np.array(mat, dtype=float)
    n = a.shape[0]
    scale = np.abs(a).max()
    if scale == 0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(i + 1, n)))
        if off <= tol * scale:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                if a[i, j] == 0.0:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * a[i, j])
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                rot = np.eye(n)
                rot[i, i] = rot[j, j] = cs
                rot[i, j] = sn
                rot[j, i] = -sn
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def principal_stresses(s) -> np.ndarray:
    """Eigenvalues (descending) of the symmetric tensor(s), shape (..., 3).

    Closed-form trigonometric solution of the characteristic cubic; entries
    whose cubic discriminant is within ``DEGENERACY_TOL`` of degenerate are
    recomputed with Jacobi rotations.
    """
    c = _components(s)
    flat = c.reshape(-1, 6)
    # work on unit-scale copies so p**3 neither underflows nor overflows
    scale = np.abs(flat).max(axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    unit = flat / safe[:, None]
    xx, yy, zz, xy, xz, yz = unit.T
    q = (xx + yy + zz) / 3.0
    dxx, dyy, dzz = xx - q, yy - q, zz - q
    p2 = (dxx**2 + dyy**2 + dzz**2 + 2.0 * (xy**2 + xz**2 + yz**2)) / 6.0
    p = np.sqrt(p2)
    with np.errstate(invalid="ignore", divide="ignore"):
        det_b = (
            dxx * (dyy * dzz - yz**2) - xy * (xy * dzz - yz * xz) + xz * (xy * yz - dyy * xz)
        ) / p**3
    r = np.clip(np.where(p > 0, det_b / 2.0, 0.0), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    out = np.stack([e1, e2, e3], axis=-1)
    out = np.where((p > 0)[:, None], out, q[:, None])

    # 1 - r**2 is the cubic discriminant relative to its scale
    near = (p > DEGENERACY_TOL) & (1.0 - r**2 < DEGENERACY_TOL)
    for idx in np.flatnonzero(near):
        out[idx] = jacobi_eigenvalues(components_to_matrix(unit[idx]))
    out *= safe[:, None]
    diagonal = np.all(flat[:, 3:] == 0.0, axis=1)
    out[diagonal] = flat[diagonal, :3]
    out = np.sort(out, axis=-1)[:, ::-1]
    return out.reshape(c.shape[:-1] + (3,))


def max_shear(s):
    """Half the spread of principal stresses, (sigma_1 - sigma_3) / 2."""
    ev = principal_stresses(s)
    return _scalar_or_array((ev[..., 0] - ev[..., 2]) / 2.0)


def feature_vector_12(s) -> np.ndarray:
    c = _components(s)
    idx = [COMPONENTS.index(name) for name in FEATURE_ORDER]
    absval = np.abs(c[..., idx])
    return np.concatenate([absval, -absval], axis=-1)


def read_tensor_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read ``sxx,syy,szz,sxy,sxz,syz[,label]`` rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [h for h in TENSOR_HEADER if h not in fields]
        if missing:
            raise ValueError(f"tensor CSV missing columns: {missing}")
        has_label = "label" in fields
        comps, labels = [], []
        for row in reader:
            comps.append([float(row[h]) for h in TENSOR_HEADER])
            if has_label:
                labels.append(int(row["label"]))
    arr = np.array(comps, dtype=float).reshape(-1, 6)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite stress component in tensor CSV")
    return arr, (np.array(labels, dtype=int) if has_label else None)


def write_feature_csv(path, components, labels=None) -> None:
    features = feature_vector_12(np.asarray(components, dtype=float).reshape(-1, 6))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FEATURE_NAMES + (("label",) if labels is not None else ()))
        for i, row in enumerate(features):
            out = [repr(float(v)) for v in row]
            if labels is not None:
                out.append(int(labels[i]))
            writer.writerow(out)
