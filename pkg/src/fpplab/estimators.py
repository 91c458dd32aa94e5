"""Statistical reduction: fits, confidence intervals, phase diagnostics.

All estimators are deterministic functions of their input samples; the
randomness lives upstream in the sampled configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    stderr: float
    n_points: int

    def ci(self, z: float = _Z95) -> tuple[float, float]:
        return self.exponent - z * self.stderr, self.exponent + z * self.stderr


def _linear_fit(x: np.ndarray, y: np.ndarray) -> FitResult:
    n = len(x)
    if n < 2:
        raise ValueError("need at least 2 points")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise ValueError("x values are all equal")
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    sse = float((resid**2).sum())
    sst = float(((y - ym) ** 2).sum())
    r2 = 1.0 if sse <= 1e-30 else (1.0 - sse / sst if sst > 0 else 0.0)
    stderr = math.sqrt(sse / (n - 2) / sxx) if n > 2 else 0.0
    return FitResult(slope, intercept, r2, stderr, n)


def fit_power_law(points: list[tuple[float, float]]) -> FitResult:
    """Least squares on (log x, log y); exponent is the slope."""
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if (xs <= 0).any() or (ys <= 0).any():
        raise ValueError("power-law fit needs positive coordinates")
    return _linear_fit(np.log(xs), np.log(ys))


@dataclass(frozen=True)
class LogGrowthFit:
    """Fit of ``y = a log n + b`` with a linear-model comparison flag."""

    slope: float
    intercept: float
    r_squared: float
    stderr: float
    n_points: int
    linear_r_squared: float
    log_preferred: bool


def fit_log_growth(points: list[tuple[float, float]]) -> LogGrowthFit:
    """Fit ``y = a log n + b`` and compare against a plain linear fit."""
    if len(points) < 4:
        raise ValueError("need at least 4 scales")
    ns = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if (ns <= 0).any():
        raise ValueError("scales must be positive")
    logfit = _linear_fit(np.log(ns), ys)
    linfit = _linear_fit(ns, ys)
    return LogGrowthFit(
        slope=logfit.exponent,
        intercept=logfit.intercept,
        r_squared=logfit.r_squared,
        stderr=logfit.stderr,
        n_points=logfit.n_points,
        linear_r_squared=linfit.r_squared,
        log_preferred=logfit.r_squared > linfit.r_squared,
    )


def subcritical_slope(samples: dict[int, list[float]]) -> FitResult:
    """Linear fit of mean ``log N_n`` against ``n``.

    Overflowed counts must be excluded upstream; an input with no usable
    scale raises.
    """
    usable = {n: vals for n, vals in samples.items() if vals}
    if len(usable) < 3:
        raise ValueError("need exact counts at 3 or more scales")
    ns = np.array(sorted(usable), dtype=float)
    means = np.array([float(np.mean(usable[int(n)])) for n in ns])
    return _linear_fit(ns, means)


@dataclass(frozen=True)
class SlopeSweep:
    rows: tuple[tuple[float, float], ...]  # (p, slope)
    increasing: bool


def slope_divergence_sweep(
    p_grid: list[float], slopes: list[float]
) -> SlopeSweep:
    """Table of per-p growth slopes with a monotonicity diagnostic."""
    if len(p_grid) != len(slopes):
        raise ValueError("p grid and slopes differ in length")
    if list(p_grid) != sorted(p_grid) or len(set(p_grid)) != len(p_grid):
        raise ValueError("p grid must be strictly increasing")
    rows = tuple(zip(map(float, p_grid), map(float, slopes)))
    inc = all(b > a for a, b in zip(slopes, slopes[1:]))
    return SlopeSweep(rows=rows, increasing=inc)


@dataclass(frozen=True)
class MuEstimate:
    """Time-constant estimate with a scaling-aware confidence interval.

    ``mu_hat`` is the mean of ``a_{0,n}/n`` at the largest scale; since
    mean passage time per unit distance is nonincreasing in ``n``, that
    is an upper estimate of the limit.  The interval endpoints come from
    a regression of the per-scale means on ``mu*n + beta*log n + gamma``
    (the log term absorbs the critical-phase growth), whose slope is a
    consistent estimate of the limit; a fixed-n mean alone cannot
    separate a zero time constant from finite-size drift.
    """

    p: float
    mu_hat: float
    ci_low: float
    ci_high: float
    n_grid: tuple[int, ...]
    slope: float = 0.0
    slope_stderr: float = 0.0
    subadditive_ok: bool = True
    details: dict = field(default_factory=dict)


def estimate_mu(samples: dict[int, list[float]], p: float = float("nan")) -> MuEstimate:
    """Estimate ``lim a_{0,n}/n`` from per-scale passage-time samples."""
    grid = sorted(samples)
    if len(grid) < 3:
        raise ValueError("need at least 3 distinct scales")
    for n in grid:
        if len(samples[n]) < 30:
            raise ValueError("need at least 30 replicates per scale")
    ns = np.array(grid, dtype=float)
    means = np.array([float(np.mean(samples[n])) for n in grid])
    ses = np.array(
        [float(np.std(samples[n], ddof=1)) / math.sqrt(len(samples[n])) for n in grid]
    )
    n_max = grid[-1]
    a_max = np.asarray(samples[n_max], dtype=float)
    mu_hat = float(a_max.mean() / n_max)

    # weighted regression of mean a_n on n (+ log n when there is room)
    with_log = len(grid) >= 4
    cols = [ns, np.ones_like(ns)]
    if with_log:
        cols.insert(1, np.log(ns))
    x = np.column_stack(cols)
    w = 1.0 / np.maximum(ses, 1e-12)
    xw = x * w[:, None]
    yw = means * w
    coef, residuals, *_ = np.linalg.lstsq(xw, yw, rcond=None)
    slope = float(coef[0])
    dof = len(grid) - x.shape[1]
    fitted = x @ coef
    chi2 = float((((means - fitted) / np.maximum(ses, 1e-12)) ** 2).sum())
    inflation = math.sqrt(max(1.0, chi2 / dof)) if dof > 0 else 1.0
    cov = np.linalg.inv(xw.T @ xw)
    slope_se = math.sqrt(max(cov[0, 0], 0.0)) * inflation

    ci_low = slope - _Z95 * slope_se
    ci_high = max(slope + _Z95 * slope_se, mu_hat)
    ci_low = min(ci_low, mu_hat)

    # subadditivity diagnostic: means of a_n / n nonincreasing within noise
    per_n = means / ns
    per_n_se = ses / ns
    sub_ok = True
    for i in range(len(grid) - 1):
        tol = 3.0 * math.hypot(per_n_se[i], per_n_se[i + 1])
        if per_n[i + 1] > per_n[i] + tol:
            sub_ok = False
    return MuEstimate(
        p=p,
        mu_hat=mu_hat,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        n_grid=tuple(grid),
        slope=slope,
        slope_stderr=float(slope_se),
        subadditive_ok=sub_ok,
        details={"means": means.tolist(), "stderrs": ses.tolist(), "with_log": with_log},
    )
