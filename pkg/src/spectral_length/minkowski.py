"""Minkowski 4-vector algebra in signature (+, -, -, -).

Internal quantities use c = 1; the unit-carrying helpers take the speed of
light explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact by definition of the meter
ETA = np.diag([1.0, -1.0, -1.0, -1.0])
NULL_TOL = 1e-9


class CausalType(str, Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    NULL = "null"


@dataclass(frozen=True)
class FourVector:
    t: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        for name in ("t", "x", "y", "z"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"component {name} is not finite: {val}")
            object.__setattr__(self, name, val)

    def __iter__(self):
        return iter((self.t, self.x, self.y, self.z))

    def __array__(self, dtype=None, copy=None):
        return np.array(tuple(self), dtype=dtype or float)

    def __neg__(self) -> "FourVector":
        return FourVector(-self.t, -self.x, -self.y, -self.z)

    def scaled(self, lam: float) -> "FourVector":
        return FourVector(*(lam * c for c in self))


def _components(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (4,):
        raise ValueError(f"expected 4 components, got shape {arr.shape}")
    return arr


def inner(x, y) -> float:
    a, b = _components(x), _components(y)
    return float(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3])


def norm_sq(x) -> float:
    return inner(x, x)


def lower(x) -> np.ndarray:
    """Covariant components eta_{mu nu} x^nu."""
    return ETA @ _components(x)


def _null_threshold(x) -> float:
    return NULL_TOL * max(1.0, float(np.max(_components(x) ** 2)))


def classify(x) -> CausalType:
    n = norm_sq(x)
    tol = _null_threshold(x)
    if n > tol:
        return CausalType.TIMELIKE
    if n < -tol:
        return CausalType.SPACELIKE
    return CausalType.NULL


def angle(x, y) -> float:
    """Angle in radians between two non-null vectors of the same causal type.

    The cosine is eta(X, Y) / sqrt(|X|^2 |Y|^2), signed so that a vector makes
    angle 0 with itself for either causal type, then clamped to [-1, 1].
    Timelike pairs have Minkowski "cosine" >= 1 and so clamp to angle 0.
    """
    tx, ty = classify(x), classify(y)
    if tx is CausalType.NULL or ty is CausalType.NULL:
        raise ValueError("angle is undefined for null vectors")
    if tx is not ty:
        raise ValueError(f"angle is undefined between {tx.value} and {ty.value} vectors")
    nx, ny = norm_sq(x), norm_sq(y)
    sign = 1.0 if tx is CausalType.TIMELIKE else -1.0
    cos = sign * inner(x, y) / (math.sqrt(abs(nx)) * math.sqrt(abs(ny)))
    return math.acos(min(1.0, max(-1.0, cos)))


def proper_time_sq(dt: float, dx: float, dy: float, dz: float, c: float = SPEED_OF_LIGHT) -> float:
    """(c dt)^2 - dx^2 - dy^2 - dz^2, in squared length units."""
    return norm_sq((c * dt, dx, dy, dz))


def light_path_length(dt: float, c: float = SPEED_OF_LIGHT) -> float:
    """Distance travelled by light in vacuum during dt."""
    if dt < 0:
        raise ValueError(f"time interval must be non-negative, got {dt}")
    return c * dt


def metric_inverse_check(metric=None, inverse=None) -> float:
    """Max-entry residual of metric @ inverse - I (defaults to eta with itself)."""
    g = ETA if metric is None else np.asarray(metric, dtype=float)
    ginv = ETA if inverse is None else np.asarray(inverse, dtype=float)
    return float(np.max(np.abs(g @ ginv - np.eye(g.shape[0]))))
