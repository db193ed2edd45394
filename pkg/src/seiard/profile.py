"""Profile likelihood: per-parameter curves of the fit loss with all other
parameters minimized out, shape-based identifiability verdicts, and
sub-level-set confidence intervals.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from . import defaults
from .dynamics import ModelParams
from .loss import FitWindow, fit_loss
from .optimize import NoFeasiblePointError, SearchSpace, minimize
from .synthdata import Dataset

LOG_SPACED_PARAMS = ("t_inc", "t_inf", "t_recov", "t_fatal")
GRID_POINTS = 25
PLATEAU_SPAN_LIMIT = 0.2

VERDICT_IDENTIFIABLE = "identifiable"
VERDICT_NON_IDENTIFIABLE = "non-identifiable"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class PlCurve:
    """Profile of the fit loss along one parameter.

    argmins[j] holds the complementary parameter dict that attained
    profiled_loss[j]; failed[j] marks grid points whose inner optimization
    found no feasible point (their loss is +inf, never silently dropped).
    """

    param_name: str
    grid: np.ndarray
    profiled_loss: np.ndarray
    argmins: tuple[dict[str, float], ...]
    failed: np.ndarray

    def __post_init__(self):
        if not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if not (len(self.grid) == len(self.profiled_loss)
                == len(self.argmins) == len(self.failed)):
            raise ValueError("curve arrays must share one length")

    @property
    def min_loss(self) -> float:
        return float(np.min(self.profiled_loss))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "profiled_loss"])
            for theta, value in zip(self.grid, self.profiled_loss):
                writer.writerow([repr(float(theta)), repr(float(value))])


@dataclass(frozen=True)
class PlInterval:
    """Sub-level set {theta : profiled loss <= threshold} as grid segments."""

    alpha: float
    threshold: float
    segments: tuple[tuple[float, float], ...]
    censored_left: bool
    censored_right: bool

    @property
    def width(self) -> float:
        return sum(hi - lo for lo, hi in self.segments)

    @property
    def span(self) -> tuple[float, float] | None:
        if not self.segments:
            return None
        return self.segments[0][0], self.segments[-1][1]

    def contains(self, value: float) -> bool:
        return any(lo <= value <= hi for lo, hi in self.segments)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "threshold": self.threshold,
            "segments": [[lo, hi] for lo, hi in self.segments],
            "censored_left": self.censored_left,
            "censored_right": self.censored_right,
        }


def default_grid(param_name: str, bounds: tuple[float, float],
                 n_points: int = GRID_POINTS) -> np.ndarray:
    """Grid over the search interval: log-spaced for the time constants,
    linear for rates, fractions and initial counts."""
    lo, hi = bounds
    if param_name in LOG_SPACED_PARAMS:
        if lo <= 0:
            raise ValueError(f"log grid needs lo > 0, got {lo} for {param_name}")
        return np.geomspace(lo, hi, n_points)
    return np.linspace(lo, hi, n_points)


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence((seed, index)).generate_state(1)[0])


def _profile_point(dataset: Dataset, param_name: str, value: float,
                   space: SearchSpace, window: FitWindow, inner_budget: int,
                   seed: int, method: str, init_points,
                   loss_fn=None) -> tuple[float, dict, bool]:
    pinned_space = space.pin(param_name, value)
    if loss_fn is None:
        loss_fn = fit_loss

    def objective(candidate: dict[str, float]) -> float:
        return loss_fn(dataset, ModelParams.from_dict(candidate), window)

    try:
        result = minimize(objective, pinned_space, budget=inner_budget,
                          seed=seed, method=method, init_points=init_points)
    except NoFeasiblePointError:
        return math.inf, {}, True
    complementary = {k: v for k, v in result.best_params.items() if k != param_name}
    return result.best_loss, complementary, False


def _strip_to_free(params: dict[str, float], space: SearchSpace,
                   drop: str) -> list[float] | None:
    free = [name for name in space.free_names if name != drop]
    try:
        return [params[name] for name in free]
    except KeyError:
        return None


def profile_likelihood(dataset: Dataset, param_name: str, grid=None,
                       space: SearchSpace | None = None,
                       window: FitWindow = None,
                       inner_budget: int = 300, seed: int = 0,
                       method: str = "random+nm", warm_start: bool = True,
                       center: dict[str, float] | None = None,
                       n_jobs: int = 1, loss_fn=None) -> PlCurve:
    """Profile the fit loss along one free parameter.

    With warm_start the sweep runs as two sequential passes outward from the
    global fit, feeding each inner run the neighboring grid point's argmin as
    an extra starting point; this suppresses spurious bumps caused by inner
    optimizer failures.  With warm_start off, grid points are independent and
    may be evaluated in parallel processes (n_jobs > 1).

    Args:
        dataset: observations to fit against.
        param_name: the profiled parameter; must be free in the space.
        grid: strictly increasing values; defaults to the standard 25-point
            grid over the parameter's search interval.
        space: search box (with any pinned parameters); defaults to the full
            standard box.
        window: fit window, defaulting to the standard training window.
        inner_budget: objective evaluations per grid point.
        seed: base seed; each grid point derives its own stream from it.
        method: inner optimizer method.
        center: optional known global-fit parameter dict; when absent and
            warm-starting, a global fit is run first.
        n_jobs: process count for the independent-point mode.
        loss_fn: objective as (dataset, params, window) -> float; defaults to
            the standard fit loss.  Must be picklable when n_jobs > 1.

    Returns:
        PlCurve over the grid.
    """
    if space is None:
        space = SearchSpace(dict(defaults.SEARCH_BOUNDS))
    if param_name not in space.free_names:
        raise ValueError(f"{param_name} is not free in the search space")
    if window is None:
        window = FitWindow(*defaults.DEFAULT_WINDOW)
    if grid is None:
        grid = default_grid(param_name, space.bounds[param_name])
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")

    n = grid.size
    losses = np.full(n, math.inf)
    argmins: list[dict[str, float]] = [{} for _ in range(n)]
    failed = np.ones(n, dtype=bool)

    if not warm_start:
        jobs = [(dataset, param_name, float(grid[j]), space, window,
                 inner_budget, _point_seed(seed, j), method, None, loss_fn)
                for j in range(n)]
        if n_jobs > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                outputs = list(pool.map(_profile_point_star, jobs))
        else:
            outputs = [_profile_point_star(job) for job in jobs]
        for j, (loss, arg, fail) in enumerate(outputs):
            losses[j], argmins[j], failed[j] = loss, arg, fail
        return PlCurve(param_name, grid, losses, tuple(argmins), failed)

    if center is None:
        center_loss = fit_loss if loss_fn is None else loss_fn

        def objective(candidate: dict[str, float]) -> float:
            return center_loss(dataset, ModelParams.from_dict(candidate), window)
        # the global fit gets the seed slot one past the grid indices
        fit = minimize(objective, space, budget=inner_budget,
                       seed=_point_seed(seed, grid.size), method=method)
        center = fit.best_params
    start_index = int(np.argmin(np.abs(grid - center[param_name])))

    center_free = _strip_to_free(center, space, param_name)

    def sweep(indices):
        previous = center_free
        for j in indices:
            init = [previous] if previous is not None else None
            losses[j], argmins[j], failed[j] = _profile_point(
                dataset, param_name, float(grid[j]), space, window,
                inner_budget, _point_seed(seed, j), method, init, loss_fn)
            if not failed[j]:
                previous = _strip_to_free({**argmins[j], param_name: grid[j]},
                                          space, param_name)

    sweep(range(start_index, n))
    sweep(range(start_index - 1, -1, -1))
    return PlCurve(param_name, grid, losses, tuple(argmins), failed)


def _profile_point_star(job):
    return _profile_point(*job)


def _merged_runs(values: np.ndarray, tol: float) -> list[str]:
    """Collapse the discrete slope sequence into runs of 'down', 'flat', 'up'."""
    kinds = []
    for step in np.diff(values):
        if abs(step) <= tol:
            kind = "flat"
        else:
            kind = "up" if step > 0 else "down"
        if not kinds or kinds[-1] != kind:
            kinds.append(kind)
    return kinds


def unimodality_verdict(curve: PlCurve, rel_tol: float = 0.05) -> str:
    """Classify the curve shape for statistical identifiability.

    A single tolerance-smoothed descent/ascent pair is `identifiable`; two
    or more separated basins, or a global-minimum plateau wider than 20% of
    the grid span, is `non-identifiable`; anything else (monotone curves,
    minima pinned at an edge) is `inconclusive`.
    """
    if len(curve.grid) < 5:
        raise ValueError("verdict needs at least 5 grid points")
    finite = curve.profiled_loss[np.isfinite(curve.profiled_loss)]
    if finite.size < 5:
        return VERDICT_INCONCLUSIVE
    values = curve.profiled_loss
    value_range = float(finite.max() - finite.min())
    tol = rel_tol * value_range

    if value_range == 0.0:
        return VERDICT_NON_IDENTIFIABLE

    # width of the global-minimum band, as a fraction of the grid span
    band = np.isfinite(values) & (values <= finite.min() + tol)
    band_indices = np.nonzero(band)[0]
    span = curve.grid[-1] - curve.grid[0]
    plateau = (curve.grid[band_indices[-1]] - curve.grid[band_indices[0]]) / span

    runs = _merged_runs(np.where(np.isfinite(values), values, finite.max()), tol)
    directional = [r for r in runs if r != "flat"]
    valleys = sum(1 for a, b in zip(directional, directional[1:])
                  if (a, b) == ("down", "up"))

    if valleys >= 2 or plateau > PLATEAU_SPAN_LIMIT:
        return VERDICT_NON_IDENTIFIABLE
    if valleys == 1:
        return VERDICT_IDENTIFIABLE
    return VERDICT_INCONCLUSIVE


def pl_interval(curve: PlCurve, threshold: float, alpha: float = 0.95) -> PlInterval:
    """Sub-level set of the profiled loss at the given threshold.

    Crossing points are linearly interpolated between grid neighbors; the
    censoring flags record whether the level set touches a grid end, meaning
    the true interval extends beyond the searched range.
    """
    values = curve.profiled_loss
    if threshold < curve.min_loss:
        raise ValueError(f"threshold {threshold} below curve minimum {curve.min_loss}")
    inside = np.isfinite(values) & (values <= threshold)
    segments = []
    j = 0
    n = len(values)
    while j < n:
        if not inside[j]:
            j += 1
            continue
        k = j
        while k + 1 < n and inside[k + 1]:
            k += 1
        lo = curve.grid[j]
        if j > 0 and np.isfinite(values[j - 1]):
            frac = (threshold - values[j]) / (values[j - 1] - values[j])
            lo = curve.grid[j] + frac * (curve.grid[j - 1] - curve.grid[j])
        hi = curve.grid[k]
        if k + 1 < n and np.isfinite(values[k + 1]):
            frac = (threshold - values[k]) / (values[k + 1] - values[k])
            hi = curve.grid[k] + frac * (curve.grid[k + 1] - curve.grid[k])
        segments.append((float(lo), float(hi)))
        j = k + 1
    return PlInterval(
        alpha=alpha,
        threshold=float(threshold),
        segments=tuple(segments),
        censored_left=bool(inside[0]),
        censored_right=bool(inside[-1]),
    )


def chi2_threshold(curve: PlCurve, alpha: float = 0.95) -> float:
    """Alternate threshold mode: curve minimum plus the chi-square(1)
    quantile, for the squared-loss special case."""
    return curve.min_loss + float(chi2.ppf(alpha, df=1))


def posterior_loss_threshold(dataset: Dataset, chains, window: FitWindow,
                             alpha: float = 0.95, max_draws: int = 2000,
                             seed: int = 0) -> tuple[float, np.ndarray]:
    """Default threshold mode: empirical alpha-quantile of the fit loss
    evaluated at posterior draws (subsampled without replacement when the
    pooled chains exceed max_draws)."""
    from .posterior import loss_quantile

    draws = []
    for chain in chains:
        draws.extend(chain.iter_draws())
    if len(draws) > max_draws:
        rng = np.random.default_rng(seed)
        keep = sorted(rng.choice(len(draws), size=max_draws, replace=False))
        draws = [draws[k] for k in keep]
    losses = np.array([fit_loss(dataset, params, window) for params, _, _ in draws])
    return loss_quantile(losses, alpha), losses


def write_pl_json(path, curve: PlCurve, interval: PlInterval | None = None,
                  verdict: str | None = None) -> None:
    payload = {
        "param": curve.param_name,
        "grid": [float(v) for v in curve.grid],
        "profiled_loss": [float(v) for v in curve.profiled_loss],
        "failed_points": [int(j) for j in np.nonzero(curve.failed)[0]],
    }
    if interval is not None:
        payload["interval"] = interval.to_dict()
    if verdict is not None:
        payload["verdict"] = verdict
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
