"""Power-law scaling fits ``value = beta * window_size**alpha`` under three error norms.

All fits work on ``(log window_size, log value)``:

``squared``
    ordinary least squares (closed form).
``absolute``
    least absolute deviations by iteratively reweighted least squares.
``zero``
    maximise the number of points whose log-residual lies within
    ``eps = log(1.05)``.  Candidate slopes come from a grid over [-2, 2] in
    steps of 0.001 with the intercept at the median residual; ties go to the
    smaller squared residual.  The winning inlier set is then refit by least
    squares and the refinement is kept unless it loses inliers.

``delta_alpha`` is the spread (max - min) of the three slopes and serves as a
fit-stability diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError

NORMS = ("squared", "absolute", "zero")
ZERO_EPS = math.log(1.05)
IRLS_DAMPING = 1e-10
IRLS_MAX_ITER = 100
IRLS_TOL = 1e-9
GRID = np.arange(-2000, 2001) / 1000.0


@dataclass(frozen=True)
class ScalingPoint:
    n_v: float
    value: float
    spread: float = 0.0


@dataclass(frozen=True)
class ScalingFit:
    alpha: dict[str, float]
    beta: dict[str, float]
    residual: dict[str, float]
    delta_alpha: float = field(default=0.0)


def _xy(points: Sequence[ScalingPoint]) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < 2:
        raise DataError("need at least two points to fit a power law")
    nv = np.array([p.n_v for p in points], dtype=np.float64)
    v = np.array([p.value for p in points], dtype=np.float64)
    if (v <= 0).any() or (nv <= 0).any() or not np.isfinite(v).all():
        raise DataError("power-law fit needs strictly positive, finite values")
    if (np.diff(nv) <= 0).any():
        raise DataError("window sizes must be strictly increasing")
    return np.log(nv), np.log(v)


def _wls(x, y, w=None):
    """Weighted least squares line on centred x; returns (slope, intercept)."""
    if w is None:
        w = np.ones_like(x)
    xm = np.average(x, weights=w)
    ym = np.average(y, weights=w)
    dx = x - xm
    sxx = float(np.sum(w * dx * dx))
    slope = float(np.sum(w * dx * (y - ym)) / sxx) if sxx > 0 else 0.0
    return slope, ym - slope * xm


def _fit_squared(x, y):
    a, b = _wls(x, y)
    r = y - a * x - b
    return a, b, float(np.sum(r * r))


def _fit_absolute(x, y):
    a, b = _wls(x, y)
    for _ in range(IRLS_MAX_ITER):
        r = y - a * x - b
        w = 1.0 / np.maximum(np.abs(r), IRLS_DAMPING)
        a2, b2 = _wls(x, y, w)
        done = abs(a2 - a) < IRLS_TOL and abs(b2 - b) < IRLS_TOL
        a, b = a2, b2
        if done:
            break
    return a, b, float(np.sum(np.abs(y - a * x - b)))


def _fit_zero(x, y, eps: float = ZERO_EPS):
    r = y[None, :] - GRID[:, None] * x[None, :]
    icpt = np.median(r, axis=1)
    dev = r - icpt[:, None]
    count = (np.abs(dev) < eps).sum(axis=1)
    sq = (dev * dev).sum(axis=1)
    best = np.lexsort((sq, -count))[0]
    a, b, n_in = float(GRID[best]), float(icpt[best]), int(count[best])

    inliers = np.abs(y - a * x - b) < eps
    if inliers.sum() >= 2:
        a2, b2 = _wls(x[inliers], y[inliers])
        if int((np.abs(y - a2 * x - b2) < eps).sum()) >= n_in:
            a, b = a2, b2
    n_in = int((np.abs(y - a * x - b) < eps).sum())
    return a, b, float(len(x) - n_in)


def fit_power_law(points: Sequence[ScalingPoint], norm: str = "squared",
                  eps: float = ZERO_EPS) -> tuple[float, float, float]:
    """Fit one norm; returns ``(alpha, beta, residual)``."""
    x, y = _xy(points)
    if norm == "squared":
        a, b, res = _fit_squared(x, y)
    elif norm == "absolute":
        a, b, res = _fit_absolute(x, y)
    elif norm == "zero":
        a, b, res = _fit_zero(x, y, eps)
    else:
        raise DataError(f"unknown norm {norm!r}; expected one of {NORMS}")
    return a, math.exp(b), res


def fit_all_norms(points: Sequence[ScalingPoint], eps: float = ZERO_EPS) -> ScalingFit:
    alpha, beta, resid = {}, {}, {}
    for norm in NORMS:
        alpha[norm], beta[norm], resid[norm] = fit_power_law(points, norm, eps)
    vals = list(alpha.values())
    return ScalingFit(alpha, beta, resid, max(vals) - min(vals))


def normalize_curve(points: Sequence[ScalingPoint], alpha: float, ref_log2: int = 17) -> list[ScalingPoint]:
    """Divide each value (and spread) by ``(window_size / 2**ref_log2) ** alpha``."""
    ref = float(2 ** ref_log2)
    out = []
    for p in points:
        s = (p.n_v / ref) ** alpha
        out.append(ScalingPoint(p.n_v, p.value / s, p.spread / s))
    return out


def points_from_arrays(n_v, values, spreads=None) -> list[ScalingPoint]:
    spreads = np.zeros(len(values)) if spreads is None else spreads
    return [ScalingPoint(float(n), float(v), float(s)) for n, v, s in zip(n_v, values, spreads)]
